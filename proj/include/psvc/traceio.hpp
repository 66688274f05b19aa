/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * This file is part of psvclab, a supply-voltage side-channel laboratory.
 */

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "psvc/errors.hpp"
#include "psvc/trace_set.hpp"

namespace psvc {

// PSVC trace container, version 1 (all integers little-endian):
//
//   offset  size  field
//        0     4  magic "PSVC"
//        4     2  version (= 1)
//        6     2  flags (bit 0: key present)
//        8     4  trace_count T
//       12     4  sample_count S
//       16     1  sample_format (0 = IEEE-754 binary32 LE)
//       17     7  reserved, zero
//       24    16  key (only if flags bit 0)
//        +     4  meta_len
//        +     *  meta, UTF-8 JSON object of string values
//
// followed by T records of: plaintext[16] | ciphertext[16] | S * binary32.
inline constexpr char kTraceMagic[4] = {'P', 'S', 'V', 'C'};
inline constexpr std::uint16_t kTraceVersion = 1;
inline constexpr std::uint8_t kSampleFormatF32le = 0;

namespace io_detail {

inline void put_u16(std::string &out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint16_t get_u16(const unsigned char *p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char *p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32(unsigned char *p, float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    p[0] = static_cast<unsigned char>(bits & 0xff);
    p[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

inline float get_f32(const unsigned char *p) {
    return std::bit_cast<float>(get_u32(p));
}

inline void read_exact(std::ifstream &is, void *dst, std::size_t n,
                       const std::string &path) {
    is.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw Error(Errc::truncated_file, path + ": unexpected end of file");
}

} // namespace io_detail

/// Serialize a TraceSet; identical sets produce byte-identical files on any
/// platform. Samples are stored as binary32, so producers quantize to that
/// grid and write/read round-trips are bit-exact.
inline void write_traceset(const TraceSet &ts, const std::string &path) {
    if (ts.samples.size() != ts.trace_count * ts.sample_count ||
        ts.plaintexts.size() != ts.trace_count ||
        ts.ciphertexts.size() != ts.trace_count)
        throw Error(Errc::bad_config, "inconsistent trace set");
    if (ts.trace_count > std::numeric_limits<std::uint32_t>::max() ||
        ts.sample_count > std::numeric_limits<std::uint32_t>::max())
        throw Error(Errc::bad_config, "trace set too large for container");

    nlohmann::json meta = nlohmann::json::object();
    for (const auto &[k, v] : ts.meta)
        meta[k] = v;
    const std::string meta_bytes = meta.dump();

    std::string header;
    header.append(kTraceMagic, 4);
    io_detail::put_u16(header, kTraceVersion);
    io_detail::put_u16(header, ts.key_known ? 1 : 0);
    io_detail::put_u32(header, static_cast<std::uint32_t>(ts.trace_count));
    io_detail::put_u32(header, static_cast<std::uint32_t>(ts.sample_count));
    header.push_back(static_cast<char>(kSampleFormatF32le));
    header.append(7, '\0');
    if (ts.key_known)
        header.append(reinterpret_cast<const char *>(ts.key.data()), 16);
    io_detail::put_u32(header, static_cast<std::uint32_t>(meta_bytes.size()));
    header += meta_bytes;

    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(Errc::io_error, "cannot open " + path + " for writing");
    os.write(header.data(), static_cast<std::streamsize>(header.size()));

    std::vector<unsigned char> record(32 + ts.sample_count * 4);
    for (std::size_t i = 0; i < ts.trace_count; ++i) {
        std::memcpy(record.data(), ts.plaintexts[i].data(), 16);
        std::memcpy(record.data() + 16, ts.ciphertexts[i].data(), 16);
        for (std::size_t s = 0; s < ts.sample_count; ++s)
            io_detail::put_f32(record.data() + 32 + 4 * s,
                               static_cast<float>(ts.at(i, s)));
        os.write(reinterpret_cast<const char *>(record.data()),
                 static_cast<std::streamsize>(record.size()));
    }
    if (!os)
        throw Error(Errc::io_error, "write failed for " + path);
}

/// Parse a trace container. All length arithmetic is validated against the
/// real file size before anything proportional to the header's claims is
/// allocated.
inline TraceSet read_traceset(const std::string &path) {
    std::error_code ec;
    const auto fsize = std::filesystem::file_size(path, ec);
    if (ec)
        throw Error(Errc::io_error, "cannot stat " + path + ": " + ec.message());
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(Errc::io_error, "cannot open " + path);

    unsigned char fixed[24];
    if (fsize < sizeof(fixed))
        throw Error(Errc::truncated_file, path + ": shorter than fixed header");
    io_detail::read_exact(is, fixed, sizeof(fixed), path);

    if (std::memcmp(fixed, kTraceMagic, 4) != 0)
        throw Error(Errc::bad_magic, path + ": not a PSVC trace container");
    const std::uint16_t version = io_detail::get_u16(fixed + 4);
    if (version != kTraceVersion)
        throw Error(Errc::unsupported_version,
                    path + ": container version " + std::to_string(version));
    const std::uint16_t flags = io_detail::get_u16(fixed + 6);
    const std::uint64_t T = io_detail::get_u32(fixed + 8);
    const std::uint64_t S = io_detail::get_u32(fixed + 12);
    if (fixed[16] != kSampleFormatF32le)
        throw Error(Errc::unsupported_format,
                    path + ": unknown sample format " + std::to_string(fixed[16]));

    TraceSet ts;
    ts.trace_count = T;
    ts.sample_count = S;
    ts.key_known = (flags & 1) != 0;

    std::uint64_t header_total = sizeof(fixed) + (ts.key_known ? 16 : 0) + 4;
    if (fsize < header_total)
        throw Error(Errc::truncated_file, path + ": header cut short");
    if (ts.key_known)
        io_detail::read_exact(is, ts.key.data(), 16, path);
    unsigned char lenbuf[4];
    io_detail::read_exact(is, lenbuf, 4, path);
    const std::uint64_t meta_len = io_detail::get_u32(lenbuf);
    if (fsize < header_total + meta_len)
        throw Error(Errc::truncated_file, path + ": metadata cut short");
    header_total += meta_len;

    std::string meta_bytes(meta_len, '\0');
    io_detail::read_exact(is, meta_bytes.data(), meta_len, path);

    const std::uint64_t record = 32 + 4 * S;
    if (T != 0 && record > (std::numeric_limits<std::uint64_t>::max() -
                            header_total) /
                               T)
        throw Error(Errc::length_mismatch,
                    path + ": declared size overflows any real file");
    const std::uint64_t expected = header_total + T * record;
    if (fsize != expected) {
        if (fsize < expected && expected - fsize < record)
            throw Error(Errc::truncated_file,
                        path + ": file ends mid-trace (" +
                            std::to_string(expected - fsize) + " bytes missing)");
        throw Error(Errc::length_mismatch,
                    path + ": header declares " + std::to_string(expected) +
                        " bytes but file has " + std::to_string(fsize));
    }

    if (!meta_bytes.empty()) {
        const nlohmann::json meta =
            nlohmann::json::parse(meta_bytes, nullptr, false);
        if (meta.is_discarded() || !meta.is_object())
            throw Error(Errc::bad_meta, path + ": metadata is not a JSON object");
        for (const auto &[k, v] : meta.items()) {
            if (!v.is_string())
                throw Error(Errc::bad_meta,
                            path + ": metadata value for '" + k +
                                "' is not a string");
            ts.meta[k] = v.get<std::string>();
        }
    }

    ts.samples.resize(T * S);
    ts.plaintexts.resize(T);
    ts.ciphertexts.resize(T);
    std::vector<unsigned char> buf(record);
    for (std::uint64_t i = 0; i < T; ++i) {
        io_detail::read_exact(is, buf.data(), buf.size(), path);
        std::memcpy(ts.plaintexts[i].data(), buf.data(), 16);
        std::memcpy(ts.ciphertexts[i].data(), buf.data() + 16, 16);
        for (std::uint64_t s = 0; s < S; ++s)
            ts.at(i, s) =
                static_cast<double>(io_detail::get_f32(buf.data() + 32 + 4 * s));
    }
    return ts;
}

} // namespace psvc
