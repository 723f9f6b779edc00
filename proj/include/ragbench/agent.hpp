#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragbench/modelgw.hpp"
#include "ragbench/retrieval.hpp"

namespace ragbench::agent {

enum class ProfileName { react_base, react_custom };

std::string to_string(ProfileName p);
ProfileName profile_from_string(std::string_view s);

struct AgentProfile {
    ProfileName name = ProfileName::react_base;
    std::string system_prompt_template;
    std::string turn_template;
    std::string format_reminder;
    std::size_t max_iterations = 10;
    bool confidence_required = false;
    std::size_t observation_char_budget = 2000;

    /// Built-in profiles with the bundled templates.
    static AgentProfile base();
    static AgentProfile custom();
    static AgentProfile for_name(ProfileName name);

    /// max_iterations >= 1; react_custom must require confidence.
    void validate() const;
};

inline constexpr std::string_view kSearchTool = "document_search";

/// Description of the single search tool the agent is given.
std::string search_tool_description();

struct ToolCall {
    std::string tool_name;
    std::string tool_input;
};

struct AgentStep {
    std::string thought;
    std::optional<ToolCall> action;       // absent on the terminal step
    std::optional<std::string> observation;
    std::optional<double> confidence;     // in [0, 1]
};

enum class Termination { final_answer, iteration_cap, parse_failure, error };

std::string to_string(Termination t);

struct AgentTrace {
    std::string question;
    std::string profile;
    std::vector<AgentStep> steps;
    std::string final_answer;
    std::vector<RetrievalResult> retrievals;
    std::size_t iterations_used = 0;
    Termination terminated_by = Termination::final_answer;
    std::optional<std::string> error;
    std::vector<std::string> warnings;
};

/// Fills {tools} and {tool_names}. Throws ConfigError for an empty tool list.
std::string render_system_prompt(const AgentProfile& profile, const std::vector<std::string>& tool_descriptions);

struct ParsedStep {
    enum class Kind { action, final_answer, invalid };
    Kind kind = Kind::invalid;
    AgentStep step;  // thought, action and confidence as parsed
    std::string final_answer;
    std::vector<std::string> warnings;
};

/// Reads "Thought:", "Action:", "Action Input:", "Final Answer:" labels
/// (case-insensitive, one per line start) and any "Confidence:" value.
/// Confidence accepts a decimal or a percentage and is clamped to [0, 1]
/// with a warning when out of range. An Action that comes before any Final
/// Answer wins; output with neither is `invalid`.
ParsedStep parse_step(std::string_view model_output);

/// Numbered passages with their source, cut to `char_budget` bytes.
std::string format_observation(const RetrievalResult& result, std::size_t char_budget);

/// ReAct loop: generate, parse, search, observe, until a Final Answer or
/// max_iterations turns. An unparseable turn gets one corrective re-prompt;
/// a second failure ends the trace with the raw text as the answer. Model
/// transport failures end the trace with Termination::error.
AgentTrace run_agent(std::string_view question, const AgentProfile& profile, const Retriever& retriever,
                     model::LLMPort& llm);

}  // namespace ragbench::agent
