#pragma once

#include <nlohmann/json.hpp>

namespace stlf {

// Insertion-ordered JSON everywhere: emitted documents keep a stable,
// readable key order, and reruns produce byte-identical files.
using json = nlohmann::ordered_json;

}  // namespace stlf
