#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crypto.hpp"
#include "explorer.hpp"

namespace mimsi {

struct MilenageTestSet {
    int number;
    const char* k;
    const char* rand;
    const char* sqn;
    const char* amf;
    const char* op;
    const char* opc;
    const char* f1;
    const char* f1_star;
    const char* f2;
    const char* f3;
    const char* f4;
    const char* f5;
    const char* f5_star;
};

/// 3GPP MILENAGE conformance test sets 1 to 7.
const std::vector<MilenageTestSet>& milenage_test_sets();

enum class Suite { All, Milenage, SmallRun };

struct ConformanceReport {
    std::vector<std::string> lines;
    std::optional<std::string> first_failure;
    std::vector<ExploreVerdict> verdicts;

    bool ok() const { return !first_failure; }
    Fields to_json() const;
};

/// `corrupt_opc` flips one bit of each derived OPc before use; every set
/// must then fail, which checks that the comparison is live.
ConformanceReport run_conformance(Suite suite, bool corrupt_opc = false);

}  // namespace mimsi
