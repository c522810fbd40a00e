#pragma once

#include <string>
#include <utility>
#include <vector>

namespace entroflow {

/// One observed-vs-allowed line of a sampled assumption check.
struct AssumptionItem {
    std::string name;
    double observed = 0.0;
    double allowed = 0.0;
    bool ok = true;
};

struct AssumptionReport {
    std::vector<AssumptionItem> items;
    bool all_ok = true;

    void add(std::string name, double observed, double allowed) {
        const bool ok = observed <= allowed;
        items.push_back({std::move(name), observed, allowed, ok});
        all_ok = all_ok && ok;
    }
};

}  // namespace entroflow
