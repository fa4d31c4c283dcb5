#pragma once

#include <string>
#include <vector>

#include "bkaudit/scenario.hpp"

namespace bkaudit {

// Built-in golden scenarios, in a fixed order.
const std::vector<Scenario>& registry();
// ValidationError naming the id when it is not registered.
const Scenario& find_scenario(const std::string& id);

}  // namespace bkaudit
