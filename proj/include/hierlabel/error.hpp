// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hierlabel {

enum class ErrorKind {
    parse,
    validation,
    config,
    dimension,
    capacity,
    input,
    infeasible_evidence,
    degenerate_data,
    convergence,
    numeric,
    hash_mismatch,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every error the library throws. The kind selects the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Problems in a hierarchy config. `line` is 1-based, 0 when the error is not tied to a line.
class GraphConfigError : public Error {
public:
    enum class Reason {
        syntax,
        duplicate_id,
        duplicate_name,
        sparse_ids,
        dangling_edge,
        duplicate_edge,
        cycle,
        tier_violation,
        missing_root,
        multiple_roots,
        orphan,
    };

    GraphConfigError(Reason reason, std::size_t line, const std::string& message);

    Reason reason() const noexcept { return reason_; }
    std::size_t line() const noexcept { return line_; }

private:
    Reason reason_;
    std::size_t line_;
};

const char* to_string(GraphConfigError::Reason reason) noexcept;

/// Exit codes used by the command line tool.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int config = 2;
inline constexpr int data = 3;
inline constexpr int numeric = 4;
inline constexpr int io = 5;
}  // namespace exit_code

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace hierlabel
