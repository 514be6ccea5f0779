#pragma once

#include <optional>
#include <string_view>

#include "clcts/error.hpp"

// Access to the data files under core/data/, compiled into the library.
namespace clcts::data {

std::optional<std::string_view> find(std::string_view name);

// Throws Error if no file of that name was embedded.
std::string_view get(std::string_view name);

}  // namespace clcts::data
