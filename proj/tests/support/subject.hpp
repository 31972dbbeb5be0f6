#pragma once

#include <oodn/quantity.hpp>

#include <string_view>
#include <vector>

namespace oodn::testing {

// Bare property bag for evaluating expressions without building objects.
struct Bag {
    std::vector<QuantitativeProperty> props;

    const QuantitativeProperty* find_quantitative(std::string_view name) const {
        for (const auto& p : props) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }
};

} // namespace oodn::testing
