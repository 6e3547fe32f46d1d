#pragma once

#include <json.hpp>

#include <algorithm>
#include <string>
#include <vector>

namespace soapguard {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

// One report type serves all three validators; mode says which ran.
struct VerificationReport {
    std::string mode;
    std::vector<Check> checks;

    bool accepted() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }

    void add(std::string name, bool pass, std::string detail) {
        checks.push_back({std::move(name), pass, std::move(detail)});
    }

    const Check* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    std::vector<std::string> failing_names() const {
        std::vector<std::string> names;
        for (const auto& c : checks)
            if (!c.pass) names.push_back(c.name);
        return names;
    }

    nlohmann::json to_json() const {
        nlohmann::json checks_json = nlohmann::json::array();
        for (const auto& c : checks)
            checks_json.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        return {{"verdict", accepted() ? "accept" : "reject"},
                {"mode", mode},
                {"checks", checks_json}};
    }

    std::string to_text() const {
        std::string out = "mode: " + mode + "\n";
        for (const auto& c : checks) {
            out += c.pass ? "[pass] " : "[FAIL] ";
            out += c.name;
            if (!c.detail.empty()) out += ": " + c.detail;
            out += "\n";
        }
        out += "verdict: ";
        out += accepted() ? "accept" : "reject";
        out += "\n";
        return out;
    }
};

}  // namespace soapguard
