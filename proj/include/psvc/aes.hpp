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

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>

namespace psvc {

using AesKey = std::array<std::uint8_t, 16>;
using AesBlock = std::array<std::uint8_t, 16>;

enum class AesOp : std::uint8_t { AddRoundKey, SubBytes, ShiftRows, MixColumns };

inline const char *aes_op_name(AesOp op) {
    switch (op) {
    case AesOp::AddRoundKey: return "AddRoundKey";
    case AesOp::SubBytes: return "SubBytes";
    case AesOp::ShiftRows: return "ShiftRows";
    case AesOp::MixColumns: return "MixColumns";
    }
    return "?";
}

inline constexpr std::array<std::uint8_t, 256> kSbox = {
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b,
    0xfe, 0xd7, 0xab, 0x76, 0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0,
    0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0, 0xb7, 0xfd, 0x93, 0x26,
    0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2,
    0xeb, 0x27, 0xb2, 0x75, 0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0,
    0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84, 0x53, 0xd1, 0x00, 0xed,
    0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f,
    0x50, 0x3c, 0x9f, 0xa8, 0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5,
    0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2, 0xcd, 0x0c, 0x13, 0xec,
    0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14,
    0xde, 0x5e, 0x0b, 0xdb, 0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c,
    0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79, 0xe7, 0xc8, 0x37, 0x6d,
    0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f,
    0x4b, 0xbd, 0x8b, 0x8a, 0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e,
    0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e, 0xe1, 0xf8, 0x98, 0x11,
    0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f,
    0xb0, 0x54, 0xbb, 0x16};

inline constexpr std::uint8_t sbox(std::uint8_t b) { return kSbox[b]; }

inline constexpr int hamming_weight(std::uint8_t b) { return std::popcount(b); }

inline constexpr int hamming_distance(std::uint8_t a, std::uint8_t b) {
    return std::popcount(static_cast<std::uint8_t>(a ^ b));
}

/// All intermediate states of one AES-128 encryption: the initial
/// AddRoundKey output, then each operation output of rounds 1-10
/// (MixColumns is absent in round 10). 1 + 9*4 + 3 = 40 states; the last
/// one is the ciphertext.
struct RoundTrace {
    static constexpr std::size_t state_count = 40;

    std::array<AesBlock, state_count> states{};

    static constexpr AesOp op_at(std::size_t j) {
        if (j == 0)
            return AesOp::AddRoundKey;
        if (j >= 37) // final round: SubBytes, ShiftRows, AddRoundKey
            return j == 37 ? AesOp::SubBytes
                           : (j == 38 ? AesOp::ShiftRows : AesOp::AddRoundKey);
        switch ((j - 1) % 4) {
        case 0: return AesOp::SubBytes;
        case 1: return AesOp::ShiftRows;
        case 2: return AesOp::MixColumns;
        default: return AesOp::AddRoundKey;
        }
    }
};

namespace detail {

inline constexpr std::uint8_t xtime(std::uint8_t a) {
    return static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1b : 0x00));
}

// Byte i sits at row i%4, column i/4; row r rotates left by r.
inline constexpr std::array<std::uint8_t, 16> kShiftRowsMap = {
    0, 5, 10, 15, 4, 9, 14, 3, 8, 13, 2, 7, 12, 1, 6, 11};

inline void sub_bytes(AesBlock &s) {
    for (auto &b : s)
        b = kSbox[b];
}

inline void shift_rows(AesBlock &s) {
    AesBlock t = s;
    for (std::size_t i = 0; i < 16; ++i)
        s[i] = t[kShiftRowsMap[i]];
}

inline void mix_columns(AesBlock &s) {
    for (std::size_t c = 0; c < 4; ++c) {
        const std::uint8_t a0 = s[4 * c], a1 = s[4 * c + 1], a2 = s[4 * c + 2],
                           a3 = s[4 * c + 3];
        s[4 * c + 0] = xtime(a0) ^ (xtime(a1) ^ a1) ^ a2 ^ a3;
        s[4 * c + 1] = a0 ^ xtime(a1) ^ (xtime(a2) ^ a2) ^ a3;
        s[4 * c + 2] = a0 ^ a1 ^ xtime(a2) ^ (xtime(a3) ^ a3);
        s[4 * c + 3] = (xtime(a0) ^ a0) ^ a1 ^ a2 ^ xtime(a3);
    }
}

inline void add_round_key(AesBlock &s, const AesBlock &rk) {
    for (std::size_t i = 0; i < 16; ++i)
        s[i] ^= rk[i];
}

} // namespace detail

/// AES-128 key schedule; round key 0 is the cipher key itself.
inline std::array<AesBlock, 11> expand_key(const AesKey &key) {
    constexpr std::array<std::uint8_t, 10> rcon = {0x01, 0x02, 0x04, 0x08, 0x10,
                                                   0x20, 0x40, 0x80, 0x1b, 0x36};
    std::array<std::array<std::uint8_t, 4>, 44> w{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            w[i][j] = key[4 * i + j];
    for (std::size_t i = 4; i < 44; ++i) {
        std::array<std::uint8_t, 4> t = w[i - 1];
        if (i % 4 == 0) {
            t = {kSbox[t[1]], kSbox[t[2]], kSbox[t[3]], kSbox[t[0]]};
            t[0] ^= rcon[i / 4 - 1];
        }
        for (std::size_t j = 0; j < 4; ++j)
            w[i][j] = w[i - 4][j] ^ t[j];
    }
    std::array<AesBlock, 11> rks{};
    for (std::size_t r = 0; r < 11; ++r)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                rks[r][4 * i + j] = w[4 * r + i][j];
    return rks;
}

struct EncryptionResult {
    AesBlock ciphertext{};
    RoundTrace rounds{};
};

/// AES-128-ECB single-block encryption, recording every intermediate state.
inline EncryptionResult encrypt_block(const AesKey &key, const AesBlock &pt) {
    const auto rks = expand_key(key);
    EncryptionResult out;
    AesBlock s = pt;
    std::size_t j = 0;

    detail::add_round_key(s, rks[0]);
    out.rounds.states[j++] = s;
    for (std::size_t round = 1; round <= 9; ++round) {
        detail::sub_bytes(s);
        out.rounds.states[j++] = s;
        detail::shift_rows(s);
        out.rounds.states[j++] = s;
        detail::mix_columns(s);
        out.rounds.states[j++] = s;
        detail::add_round_key(s, rks[round]);
        out.rounds.states[j++] = s;
    }
    detail::sub_bytes(s);
    out.rounds.states[j++] = s;
    detail::shift_rows(s);
    out.rounds.states[j++] = s;
    detail::add_round_key(s, rks[10]);
    out.rounds.states[j++] = s;

    out.ciphertext = s;
    return out;
}

} // namespace psvc
