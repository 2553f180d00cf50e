// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/error.hpp"

namespace hierlabel {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::parse: return "parse error";
        case ErrorKind::validation: return "validation error";
        case ErrorKind::config: return "config error";
        case ErrorKind::dimension: return "dimension error";
        case ErrorKind::capacity: return "capacity error";
        case ErrorKind::input: return "input error";
        case ErrorKind::infeasible_evidence: return "infeasible evidence";
        case ErrorKind::degenerate_data: return "degenerate data";
        case ErrorKind::convergence: return "convergence failure";
        case ErrorKind::numeric: return "numeric failure";
        case ErrorKind::hash_mismatch: return "graph hash mismatch";
        case ErrorKind::io: return "i/o error";
    }
    return "error";
}

const char* to_string(GraphConfigError::Reason reason) noexcept {
    using R = GraphConfigError::Reason;
    switch (reason) {
        case R::syntax: return "syntax";
        case R::duplicate_id: return "duplicate node id";
        case R::duplicate_name: return "duplicate node name";
        case R::sparse_ids: return "node ids not dense";
        case R::dangling_edge: return "dangling edge endpoint";
        case R::duplicate_edge: return "duplicate edge";
        case R::cycle: return "cycle";
        case R::tier_violation: return "tier violation";
        case R::missing_root: return "missing root";
        case R::multiple_roots: return "multiple roots";
        case R::orphan: return "orphan node";
    }
    return "graph error";
}

namespace {

ErrorKind kind_for(GraphConfigError::Reason reason) {
    return reason == GraphConfigError::Reason::syntax ? ErrorKind::parse : ErrorKind::validation;
}

std::string format_graph_error(GraphConfigError::Reason reason, std::size_t line,
                               const std::string& message) {
    std::string out = to_string(reason);
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    out += ": " + message;
    return out;
}

}  // namespace

GraphConfigError::GraphConfigError(Reason reason, std::size_t line, const std::string& message)
    : Error(kind_for(reason), format_graph_error(reason, line, message)), reason_(reason), line_(line) {}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::parse:
        case ErrorKind::validation:
        case ErrorKind::config:
        case ErrorKind::capacity:
            return exit_code::config;
        case ErrorKind::dimension:
        case ErrorKind::input:
        case ErrorKind::infeasible_evidence:
        case ErrorKind::degenerate_data:
        case ErrorKind::hash_mismatch:
            return exit_code::data;
        case ErrorKind::convergence:
        case ErrorKind::numeric:
            return exit_code::numeric;
        case ErrorKind::io:
            return exit_code::io;
    }
    return exit_code::usage;
}

}  // namespace hierlabel
