// Copyright 2026 The hierlabel Authors
// SPDX-License-Identifier: Apache-2.0

#include "hierlabel/binary_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hierlabel/error.hpp"

namespace hierlabel {

void ByteWriter::u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buffer_.push_back(static_cast<char>((v >> (8 * k)) & 0xFFU));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buffer_.push_back(static_cast<char>((v >> (8 * k)) & 0xFFU));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(std::string_view raw) { buffer_.append(raw); }

void ByteWriter::string(std::string_view s) {
    u64(s.size());
    bytes(s);
}

void ByteWriter::f64s(std::span<const double> values) {
    for (double v : values) f64(v);
}

void ByteReader::need(std::size_t count) {
    if (data_.size() - pos_ < count)
        throw Error(ErrorKind::io, source_ + ": truncated at byte " + std::to_string(pos_));
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    pos_ += 8;
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string_view ByteReader::bytes(std::size_t count) {
    need(count);
    auto out = data_.substr(pos_, count);
    pos_ += count;
    return out;
}

std::string ByteReader::string() {
    const auto len = u64();
    return std::string(bytes(static_cast<std::size_t>(len)));
}

std::vector<double> ByteReader::f64s(std::size_t count) {
    need(count * 8);
    std::vector<double> out(count);
    for (auto& v : out) v = f64();
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write '" + tmp + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorKind::io, "write failed for '" + tmp + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw Error(ErrorKind::io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

}  // namespace hierlabel
