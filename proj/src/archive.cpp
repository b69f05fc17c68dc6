// Copyright (c) 2026 The CPNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "cpnet/archive.hpp"

#include <cstring>
#include <fstream>

#include "cpnet/errors.hpp"

namespace cpnet {

namespace {

constexpr char kMagic[8] = {'C', 'P', 'N', 'T', 'A', 'R', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("archive truncated");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string take_string(std::istream& is) {
    const auto n = take<std::uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw IoError("archive truncated");
    return s;
}

} // namespace

void ArchiveWriter::add(const std::string& name, const Tensor<float>& t) {
    if (!arrays_.emplace(name, t).second) throw IoError("duplicate archive array: " + name);
}

void ArchiveWriter::add(const std::string& name, const Tensor<double>& t) {
    if (!arrays_.emplace(name, t).second) throw IoError("duplicate archive array: " + name);
}

void ArchiveWriter::write(const std::string& path, const nlohmann::json& meta) const {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kVersion);
    put_string(os, meta.dump());
    put<std::uint64_t>(os, arrays_.size());
    for (const auto& [name, arr] : arrays_) {
        put_string(os, name);
        std::visit(
            [&](const auto& t) {
                using Elem = typename std::decay_t<decltype(t)>::value_type;
                put<std::uint8_t>(os, static_cast<std::uint8_t>(sizeof(Elem)));
                put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
                for (int d : t.shape()) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
                put<std::uint64_t>(os, static_cast<std::uint64_t>(t.numel()) * sizeof(Elem));
                os.write(reinterpret_cast<const char*>(t.data()),
                         static_cast<std::streamsize>(t.numel() * static_cast<std::int64_t>(sizeof(Elem))));
            },
            arr);
    }
    if (!os) throw IoError("write failed: " + path);
}

ArchiveReader::ArchiveReader(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not an archive: " + path);
    }
    const auto version = take<std::uint32_t>(is);
    if (version != kVersion) throw IoError("unsupported archive version " + std::to_string(version));
    const std::string meta_str = take_string(is);
    meta_ = nlohmann::json::parse(meta_str, nullptr, false);
    if (meta_.is_discarded()) throw IoError("corrupt archive metadata: " + path);
    const auto count = take<std::uint64_t>(is);
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::string name = take_string(is);
        const auto elem = take<std::uint8_t>(is);
        const auto rank = take<std::uint32_t>(is);
        std::vector<int> shape(rank);
        std::int64_t numel = rank == 0 ? 0 : 1;
        for (auto& d : shape) {
            d = static_cast<int>(take<std::uint32_t>(is));
            numel *= d;
        }
        const auto bytes = take<std::uint64_t>(is);
        if (bytes != static_cast<std::uint64_t>(numel) * elem) throw IoError("archive size mismatch: " + name);
        if (elem == sizeof(float)) {
            Tensor<float> t(shape);
            is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(bytes));
            if (!is) throw IoError("archive truncated: " + name);
            arrays_.emplace(name, std::move(t));
        } else if (elem == sizeof(double)) {
            Tensor<double> t(shape);
            is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(bytes));
            if (!is) throw IoError("archive truncated: " + name);
            arrays_.emplace(name, std::move(t));
        } else {
            throw IoError("unknown dtype in archive: " + name);
        }
    }
}

std::vector<std::string> ArchiveReader::names() const {
    std::vector<std::string> out;
    out.reserve(arrays_.size());
    for (const auto& [k, v] : arrays_) out.push_back(k);
    return out;
}

template <typename T>
const Tensor<T>& ArchiveReader::get(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw IoError("archive is missing array: " + name);
    const auto* t = std::get_if<Tensor<T>>(&it->second);
    if (!t) throw IoError("archive dtype mismatch for: " + name);
    return *t;
}

template const Tensor<float>& ArchiveReader::get<float>(const std::string&) const;
template const Tensor<double>& ArchiveReader::get<double>(const std::string&) const;

} // namespace cpnet
