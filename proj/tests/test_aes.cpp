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

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <set>

#include "psvc/aes.hpp"
#include "psvc/rng.hpp"

#include "oracle_aes.hpp"

using namespace psvc;

namespace {

AesBlock parse_hex32(const char *hex) {
    AesBlock out{};
    for (int i = 0; i < 16; ++i) {
        auto nib = [](char c) -> int {
            if (c >= '0' && c <= '9')
                return c - '0';
            return c - 'a' + 10;
        };
        out[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 |
                                           nib(hex[2 * i + 1]));
    }
    return out;
}

} // namespace

TEST_CASE("sbox matches published values and is a bijection") {
    CHECK(sbox(0x00) == 0x63);
    CHECK(sbox(0x53) == 0xed);

    std::set<std::uint8_t> seen;
    for (int i = 0; i < 256; ++i)
        seen.insert(sbox(static_cast<std::uint8_t>(i)));
    CHECK(seen.size() == 256);
}

TEST_CASE("sbox table equals the inverse-plus-affine construction") {
    for (int i = 0; i < 256; ++i)
        CHECK(sbox(static_cast<std::uint8_t>(i)) ==
              oracle::sbox_constructed(static_cast<std::uint8_t>(i)));
}

TEST_CASE("hamming weight and distance") {
    CHECK(hamming_weight(0x00) == 0);
    CHECK(hamming_weight(0xff) == 8);
    CHECK(hamming_weight(0x06) == 2);

    CHECK(hamming_distance(0x37, 0x37) == 0);
    CHECK(hamming_distance(0x00, 0xff) == 8);
    CHECK(hamming_distance(0x0f, 0x05) == 2);

    // exhaustive: HD(a,b) == HW(a^b)
    for (int a = 0; a < 256; ++a)
        for (int b = 0; b < 256; ++b)
            REQUIRE(hamming_distance(static_cast<std::uint8_t>(a),
                                     static_cast<std::uint8_t>(b)) ==
                    hamming_weight(static_cast<std::uint8_t>(a ^ b)));
}

TEST_CASE("key expansion") {
    const AesKey zero{};
    const auto rks0 = expand_key(zero);
    CHECK(rks0[0] == zero);

    const AesKey key = parse_hex32("000102030405060708090a0b0c0d0e0f");
    const auto rks = expand_key(key);
    CHECK(rks[0] == key);
    // first word of round key 1
    CHECK(rks[1][0] == 0xd6);
    CHECK(rks[1][1] == 0xaa);
    CHECK(rks[1][2] == 0x74);
    CHECK(rks[1][3] == 0xfd);

    CHECK(expand_key(key) == rks);
}

TEST_CASE("encrypt_block reproduces the published AES-128 vector") {
    const AesKey key = parse_hex32("000102030405060708090a0b0c0d0e0f");
    const AesBlock pt = parse_hex32("00112233445566778899aabbccddeeff");
    const AesBlock expected = parse_hex32("69c4e0d86a7b0430d8cdb78070b4c55a");

    const auto enc = encrypt_block(key, pt);
    CHECK(enc.ciphertext == expected);
    CHECK(enc.rounds.states.back() == expected);
}

TEST_CASE("round trace structure") {
    CHECK(RoundTrace::state_count == 40);
    CHECK(RoundTrace::op_at(0) == AesOp::AddRoundKey);
    CHECK(RoundTrace::op_at(1) == AesOp::SubBytes);
    CHECK(RoundTrace::op_at(2) == AesOp::ShiftRows);
    CHECK(RoundTrace::op_at(3) == AesOp::MixColumns);
    CHECK(RoundTrace::op_at(4) == AesOp::AddRoundKey);
    CHECK(RoundTrace::op_at(36) == AesOp::AddRoundKey);
    CHECK(RoundTrace::op_at(37) == AesOp::SubBytes);
    CHECK(RoundTrace::op_at(38) == AesOp::ShiftRows);
    CHECK(RoundTrace::op_at(39) == AesOp::AddRoundKey);

    Rng rng(11);
    const AesKey key = rng.block();
    const AesBlock pt = rng.block();
    const auto a = encrypt_block(key, pt);
    const auto b = encrypt_block(key, pt);
    CHECK(a.ciphertext == b.ciphertext);
    CHECK(a.rounds.states == b.rounds.states);
    CHECK(a.rounds.states[39] == a.ciphertext);
}

TEST_CASE("encryption agrees with an independent reference") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const AesKey key = rng.block();
        const AesBlock pt = rng.block();
        const auto enc = encrypt_block(key, pt);
        REQUIRE(enc.ciphertext == oracle::encrypt(key, pt));
    }
}

TEST_CASE("decrypt(encrypt(pt)) round-trips") {
    Rng rng(43);
    for (int i = 0; i < 1000; ++i) {
        const AesKey key = rng.block();
        const AesBlock pt = rng.block();
        const auto ct = encrypt_block(key, pt).ciphertext;
        REQUIRE(oracle::decrypt(key, ct) == pt);
    }
}
