#pragma once

#include <concepts>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oodn {

using NumberList = std::vector<double>;

/// A measured magnitude: a single number or an ordered list of numbers
/// (side lengths, angle measures, ...).
using Magnitude = std::variant<double, NumberList>;

/// A named (value, units) pair. Class-level properties may leave the value
/// out and constrain only the units.
struct QuantitativeProperty {
    std::string name;
    std::optional<Magnitude> value;
    std::string units;

    friend bool operator==(const QuantitativeProperty&, const QuantitativeProperty&) = default;
};

/// Anything expressions can be evaluated against: it must look up
/// quantitative properties by name, returning nullptr when there is none.
template <class S>
concept QuantitySource = requires(const S& s, std::string_view name) {
    { s.find_quantitative(name) } -> std::convertible_to<const QuantitativeProperty*>;
};

/// Subject with no properties at all. Used for constant folding.
struct NoSubject {
    const QuantitativeProperty* find_quantitative(std::string_view) const noexcept { return nullptr; }
};

} // namespace oodn
