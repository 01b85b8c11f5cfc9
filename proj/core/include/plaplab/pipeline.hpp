#pragma once

#include "plaplab/config.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace plaplab {

std::string sha256_hex(std::string_view data);

struct Manifest {
    struct Entry {
        std::string filename;
        std::string digest;
        std::size_t bytes = 0;
    };
    std::vector<Entry> entries; // sorted by filename
    std::string to_text() const;
};

struct RunResult {
    int exit_code = 0; // 0 success, 2 well-formed non-convergence
    Manifest manifest;
};

/// Collects named text artifacts and writes them, plus a digest manifest,
/// under one directory. Re-running an identical configuration reproduces
/// identical digests.
class OutputWriter {
public:
    explicit OutputWriter(std::string dir);
    void write_text(const std::string& name, const std::string& content);
    Manifest finalize(); // writes manifest.txt

private:
    std::string dir_;
    Manifest manifest_;
};

/// Dispatches a validated configuration to its pipeline and writes every
/// artifact plus manifest.txt into the output directory. Errors propagate as
/// exceptions; the caller maps them to exit code 1.
RunResult run_command(const RunConfig& config, const std::string& out_override = "",
                      std::ostream* log = nullptr);

} // namespace plaplab
