#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ragbench::assets {

/// Built-in text asset by relative name, e.g. "prompts/react_base.txt".
/// Throws Error for an unknown name.
std::string_view get(std::string_view name);

std::vector<std::string> names();

/// Contents of `override_path` when non-empty, otherwise the built-in asset.
std::string load(std::string_view name, const std::string& override_path = {});

/// Replaces every "{key}" occurrence for the given keys; other braces are
/// left alone.
std::string render(std::string_view templ, const std::map<std::string, std::string>& values);

}  // namespace ragbench::assets
