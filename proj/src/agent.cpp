#include "ragbench/agent.hpp"

#include "ragbench/assets.hpp"
#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <regex>
#include <sstream>

namespace ragbench::agent {

std::string to_string(ProfileName p) { return p == ProfileName::react_custom ? "react_custom" : "react_base"; }

ProfileName profile_from_string(std::string_view s) {
    if (s == "react_base") return ProfileName::react_base;
    if (s == "react_custom") return ProfileName::react_custom;
    throw ConfigError("unknown agent profile '" + std::string(s) + "'");
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::final_answer: return "final_answer";
        case Termination::iteration_cap: return "iteration_cap";
        case Termination::parse_failure: return "parse_failure";
        case Termination::error: return "error";
    }
    return "error";
}

AgentProfile AgentProfile::base() {
    AgentProfile p;
    p.name = ProfileName::react_base;
    p.system_prompt_template = std::string(assets::get("prompts/react_base.txt"));
    p.turn_template = std::string(assets::get("prompts/agent_turn.txt"));
    // Prompts must extend each other, so nothing may follow the transcript.
    while (!p.turn_template.empty() && std::isspace(static_cast<unsigned char>(p.turn_template.back()))) {
        p.turn_template.pop_back();
    }
    p.format_reminder = text::trim(assets::get("prompts/format_reminder.txt"));
    p.confidence_required = false;
    return p;
}

AgentProfile AgentProfile::custom() {
    AgentProfile p = base();
    p.name = ProfileName::react_custom;
    p.system_prompt_template = std::string(assets::get("prompts/react_custom.txt"));
    p.confidence_required = true;
    return p;
}

AgentProfile AgentProfile::for_name(ProfileName name) {
    return name == ProfileName::react_custom ? custom() : base();
}

void AgentProfile::validate() const {
    if (max_iterations < 1) throw ConfigError("agent max_iterations must be at least 1");
    if (name == ProfileName::react_custom && !confidence_required) {
        throw ConfigError("react_custom profile must require confidence scores");
    }
    if (system_prompt_template.empty()) throw ConfigError("agent system prompt template is empty");
    if (turn_template.find("{transcript}") == std::string::npos) {
        throw ConfigError("agent turn template lacks a {transcript} placeholder");
    }
}

std::string search_tool_description() {
    return std::string(kSearchTool) +
           "(query): searches the document collection and returns the most relevant passages with their "
           "source document. The input is a search query (keywords work best).";
}

std::string render_system_prompt(const AgentProfile& profile, const std::vector<std::string>& tool_descriptions) {
    if (tool_descriptions.empty()) throw ConfigError("agent needs at least one tool");
    std::string tools;
    std::string names;
    for (const auto& d : tool_descriptions) {
        tools += (tools.empty() ? "" : "\n") + ("- " + d);
        const auto paren = d.find_first_of("(:");
        names += (names.empty() ? "" : ", ") + text::trim(d.substr(0, paren));
    }
    return assets::render(profile.system_prompt_template, {{"tools", tools}, {"tool_names", names}});
}

namespace {

enum class Label { thought, action, action_input, final_answer };

struct LabelHit {
    Label label;
    std::size_t line;
    std::string rest;
};

std::optional<std::pair<Label, std::string>> match_label(std::string_view line) {
    std::string s = text::trim(line);
    while (!s.empty() && (s.front() == '*' || s.front() == '#')) s.erase(0, 1);
    s = text::trim(s);
    const std::string lower = text::to_lower(s);
    static const std::pair<std::string_view, Label> labels[] = {
        {"final answer", Label::final_answer},
        {"action input", Label::action_input},
        {"action", Label::action},
        {"thought", Label::thought},
    };
    for (const auto& [name, label] : labels) {
        if (lower.rfind(name, 0) != 0) continue;
        std::size_t i = name.size();
        while (i < s.size() && s[i] == '*') ++i;
        if (i < s.size() && s[i] == ':') {
            std::string rest = s.substr(i + 1);
            while (!rest.empty() && rest.front() == '*') rest.erase(0, 1);
            return std::make_pair(label, text::trim(rest));
        }
    }
    return std::nullopt;
}

std::string strip_quotes(std::string s) {
    s = text::trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '`' && s.back() == '`'))) {
        s = s.substr(1, s.size() - 2);
    }
    return text::trim(s);
}

std::string fmt_score(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

ParsedStep parse_step(std::string_view model_output) {
    ParsedStep out;
    std::vector<std::string> lines;
    {
        std::istringstream in{std::string(model_output)};
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }
    std::vector<LabelHit> hits;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto m = match_label(lines[i])) hits.push_back({m->first, i, m->second});
    }
    const auto section = [&](std::size_t h) {
        std::string body = hits[h].rest;
        const std::size_t end = h + 1 < hits.size() ? hits[h + 1].line : lines.size();
        for (std::size_t i = hits[h].line + 1; i < end; ++i) body += "\n" + lines[i];
        return text::trim(body);
    };
    const auto first = [&](Label l) -> std::optional<std::size_t> {
        for (std::size_t h = 0; h < hits.size(); ++h) {
            if (hits[h].label == l) return h;
        }
        return std::nullopt;
    };

    if (auto t = first(Label::thought)) {
        out.step.thought = section(*t);
    } else {
        std::string pre;
        const std::size_t end = hits.empty() ? lines.size() : hits.front().line;
        for (std::size_t i = 0; i < end; ++i) pre += lines[i] + "\n";
        out.step.thought = text::trim(pre);
    }

    static const std::regex confidence(R"(confidence(?:\s+score)?\s*\**\s*:\s*\**\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*(%)?)",
                                       std::regex::icase);
    const std::string all(model_output);
    for (auto it = std::sregex_iterator(all.begin(), all.end(), confidence); it != std::sregex_iterator(); ++it) {
        double v = std::stod((*it)[1].str());
        if ((*it)[2].matched) v /= 100.0;
        out.step.confidence = v;
    }
    if (out.step.confidence && (*out.step.confidence < 0.0 || *out.step.confidence > 1.0)) {
        out.warnings.push_back("confidence " + std::to_string(*out.step.confidence) + " clamped to [0, 1]");
        out.step.confidence = std::clamp(*out.step.confidence, 0.0, 1.0);
    }

    const auto action = first(Label::action);
    const auto final_answer = first(Label::final_answer);
    if (action && (!final_answer || *action < *final_answer)) {
        std::string name = section(*action);
        if (auto nl = name.find('\n'); nl != std::string::npos) name = text::trim(name.substr(0, nl));
        std::string input;
        if (auto ai = first(Label::action_input)) input = strip_quotes(section(*ai));
        // "tool(query)" on the Action line
        if (auto paren = name.find('('); paren != std::string::npos && name.back() == ')') {
            if (input.empty()) input = strip_quotes(name.substr(paren + 1, name.size() - paren - 2));
            name = text::trim(name.substr(0, paren));
        }
        name = strip_quotes(name);
        if (!name.empty()) {
            out.kind = ParsedStep::Kind::action;
            out.step.action = ToolCall{name, input};
            return out;
        }
    }
    if (final_answer) {
        out.final_answer = section(*final_answer);
        if (!out.final_answer.empty()) {
            out.kind = ParsedStep::Kind::final_answer;
            return out;
        }
    }
    out.kind = ParsedStep::Kind::invalid;
    return out;
}

std::string format_observation(const RetrievalResult& result, std::size_t char_budget) {
    if (result.chunks.empty()) return "No matching passages found.";
    std::string out;
    for (std::size_t i = 0; i < result.chunks.size(); ++i) {
        const auto& c = result.chunks[i];
        out += "[" + std::to_string(i + 1) + "] source: " + c.doc_id + " (chunk " + c.scored.chunk_id +
               ", score " + fmt_score(c.scored.score) + ")\n" + c.text + "\n\n";
    }
    out = text::trim(out);
    if (out.size() > char_budget) {
        out = std::string(text::utf8_prefix(out, char_budget)) + " ...[truncated]";
    }
    return out;
}

AgentTrace run_agent(std::string_view question, const AgentProfile& profile, const Retriever& retriever,
                     model::LLMPort& llm) {
    profile.validate();
    AgentTrace trace;
    trace.question = std::string(question);
    trace.profile = to_string(profile.name);

    const std::string system = render_system_prompt(profile, {search_tool_description()});
    std::string transcript;
    std::string last_observation;
    std::string last_passages;

    const auto call = [&](const std::string& extra) {
        model::GenerationRequest req;
        req.prompt = assets::render(profile.turn_template, {{"system", system},
                                                            {"question", trace.question},
                                                            {"transcript", transcript + extra}});
        req.stop_sequences = {"\nObservation:"};
        req.task = std::string(model::task::agent_step);
        req.fields = {{"question", trace.question},
                      {"profile", trace.profile},
                      {"step", std::to_string(trace.steps.size())},
                      {"last_observation", last_observation},
                      {"last_passages", last_passages}};
        return llm.generate(req).text;
    };

    try {
        for (std::size_t iteration = 1; iteration <= profile.max_iterations; ++iteration) {
            trace.iterations_used = iteration;
            std::string output = call("");
            ParsedStep parsed = parse_step(output);
            if (parsed.kind == ParsedStep::Kind::invalid) {
                trace.warnings.push_back("turn " + std::to_string(iteration) + ": unparseable output, re-prompted");
                transcript += text::trim(output) + "\nObservation: " + profile.format_reminder + "\n";
                output = call("");
                parsed = parse_step(output);
                if (parsed.kind == ParsedStep::Kind::invalid) {
                    trace.terminated_by = Termination::parse_failure;
                    trace.final_answer = text::trim(output);
                    if (trace.final_answer.empty()) trace.final_answer = "No answer produced.";
                    trace.warnings.push_back("turn " + std::to_string(iteration) + ": unparseable after re-prompt");
                    return trace;
                }
            }
            for (auto& w : parsed.warnings) trace.warnings.push_back("turn " + std::to_string(iteration) + ": " + w);
            AgentStep step = std::move(parsed.step);
            if (!profile.confidence_required) step.confidence.reset();

            if (parsed.kind == ParsedStep::Kind::final_answer) {
                step.action.reset();
                trace.steps.push_back(std::move(step));
                trace.final_answer = parsed.final_answer;
                trace.terminated_by = Termination::final_answer;
                return trace;
            }

            // The single tool: every action is served by the configured retriever.
            if (text::to_lower(step.action->tool_name) != kSearchTool) {
                trace.warnings.push_back("turn " + std::to_string(iteration) + ": unknown tool '" +
                                         step.action->tool_name + "' treated as " + std::string(kSearchTool));
            }
            std::string query = step.action->tool_input;
            if (text::trim(query).empty()) {
                trace.warnings.push_back("turn " + std::to_string(iteration) + ": empty action input, searched the question");
                query = trace.question;
            }
            RetrievalResult result = retriever.retrieve(query);
            last_observation = format_observation(result, profile.observation_char_budget);
            last_passages.clear();
            for (const auto& c : result.chunks) last_passages += c.text + "\n\n";
            step.observation = last_observation;
            transcript += text::trim(output) + "\nObservation: " + last_observation + "\n";
            trace.steps.push_back(std::move(step));
            trace.retrievals.push_back(std::move(result));
        }
    } catch (const ModelError& e) {
        trace.terminated_by = Termination::error;
        trace.error = e.what();
        return trace;
    }

    trace.terminated_by = Termination::iteration_cap;
    std::string last_thought;
    for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
        if (!it->thought.empty()) {
            last_thought = it->thought;
            break;
        }
    }
    trace.final_answer = "Based on partial findings: " + last_thought;
    return trace;
}

}  // namespace ragbench::agent
