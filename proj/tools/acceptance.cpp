// One PASS/FAIL line per acceptance criterion, followed by INFO lines.
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <hmlab/suites.hpp>

namespace {

using hmlab::SuiteOptions;
using hmlab::SuiteResult;

struct Criterion {
    std::string title;
    std::vector<std::string> suites;
    double max_seconds = 0.0;  // 0: no runtime bound
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"algebraic identities", {"cybe", "reflection", "push_through"}},
        {"poisson structure", {"jacobi", "canonical", "involution"}},
        {"hierarchy fidelity", {"z_series", "generators"}},
        {"conservation under evolution", {"conservation_hm", "conservation_dual"}, 120.0},
        {"zero-curvature convergence", {"zero_curvature"}},
        {"duality cross-check", {"duality"}},
        {"boundary structure", {"boundary"}},
    };

    std::map<std::string, SuiteResult> clean;
    for (const auto& e : hmlab::suites::registry()) clean.emplace(e.name, e.run(SuiteOptions{}));

    std::vector<std::string> info;
    bool all = true;
    int index = 0;
    const int total = static_cast<int>(criteria.size()) + 1;
    for (const auto& c : criteria) {
        bool ok = true;
        std::string detail;
        for (const auto& name : c.suites) {
            const SuiteResult& r = clean.at(name);
            const bool in_time = c.max_seconds <= 0.0 || r.seconds <= c.max_seconds;
            ok = ok && r.passed() && in_time;
            detail += " " + name + (r.passed() ? "=ok" : "=fail");
            if (c.max_seconds > 0.0) detail += "(" + sci(r.seconds) + "s" + (in_time ? "" : ">limit") + ")";
            for (const auto& ch : r.checks) {
                info.push_back(name + "." + ch.name + " = " + sci(ch.value) + (ch.at_least ? " >= " : " <= ") +
                               sci(ch.threshold) + (ch.passed() ? "" : "  FAILED"));
            }
            for (const auto& i : r.info) info.push_back(name + ": " + i);
        }
        all = all && ok;
        std::cout << (ok ? "PASS" : "FAIL") << " [" << ++index << "/" << total << "] " << c.title << ":" << detail << '\n';
    }

    // every suite must notice a 1e-3 perturbation of the object it checks
    bool guards = true;
    std::string detail;
    for (const auto& e : hmlab::suites::registry()) {
        SuiteOptions o;
        o.inject = 1e-3;
        const SuiteResult r = e.run(o);
        const bool caught = !r.passed() && r.worst_residual() >= 1e-4;
        guards = guards && caught;
        detail += " " + e.name + "=" + sci(r.worst_residual()) + (caught ? "" : "(missed)");
    }
    all = all && guards;
    std::cout << (guards ? "PASS" : "FAIL") << " [" << total << "/" << total << "] sensitivity guards:" << detail << '\n';

    for (const auto& i : info) std::cout << "INFO " << i << '\n';
    std::cout << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << '\n';
    return all ? 0 : 1;
}
