// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hierlabel {

/// Appends fixed-width little-endian values to a byte buffer.
class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void bytes(std::string_view raw);
    /// u64 length prefix followed by the bytes.
    void string(std::string_view s);
    void f64s(std::span<const double> values);

    const std::string& data() const noexcept { return buffer_; }

private:
    std::string buffer_;
};

/// Reads what ByteWriter wrote. Throws Error(io) on truncation.
class ByteReader {
public:
    ByteReader(std::string_view data, std::string source) : data_(data), source_(std::move(source)) {}

    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string_view bytes(std::size_t count);
    std::string string();
    std::vector<double> f64s(std::size_t count);

    bool at_end() const noexcept { return pos_ == data_.size(); }
    std::size_t position() const noexcept { return pos_; }

private:
    void need(std::size_t count);

    std::string_view data_;
    std::string source_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);

/// Writes through a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace hierlabel
