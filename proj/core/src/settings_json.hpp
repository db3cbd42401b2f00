#pragma once

#include <initializer_list>
#include <string_view>

#include "json.hpp"
#include "poleplan/settings.hpp"

namespace poleplan::detail {

geo::BBoxLTRD bbox_from_json(const nlohmann::json& j);
immune::ImmuneParams immune_from_json(const nlohmann::json& j, immune::ImmuneParams base);

// Applies the settings keys of `obj` onto `out`. Keys listed in
// `extra_keys` are skipped; anything else unknown throws InvalidArgument.
void apply_settings(const nlohmann::json& obj, PlanSettings& out,
                    std::initializer_list<std::string_view> extra_keys = {});

}  // namespace poleplan::detail
