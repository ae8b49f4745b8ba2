// Copyright 2026 The PhyDCM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "phydcm/error.hpp"
#include "phydcm/format.hpp"

using namespace phydcm;

TEST_CASE("round_half_away breaks ties away from zero") {
  CHECK(round_half_away(0.5) == 1.0);
  CHECK(round_half_away(1.5) == 2.0);
  CHECK(round_half_away(2.5) == 3.0);
  CHECK(round_half_away(-0.5) == -1.0);
  CHECK(round_half_away(-2.5) == -3.0);
  CHECK(round_half_away(127.5) == 128.0);
  CHECK(round_half_away(0.49999999999999994) == 0.0);
}

TEST_CASE("format_fixed rounds the decimal value") {
  CHECK(format_fixed(95.66929133858268, 2) == "95.67");
  CHECK(format_fixed(80.3921568627451, 2) == "80.39");
  CHECK(format_fixed(99.0, 2) == "99.00");
  CHECK(format_fixed(100.0, 2) == "100.00");
  CHECK(format_fixed(0.8039215, 6) == "0.803922");
  CHECK(format_fixed(0.9049723756906078, 3) == "0.905");
  CHECK(format_fixed(0.125, 2) == "0.13");
  CHECK(format_fixed(2.675, 2) == "2.68");
  CHECK(format_fixed(1.005, 2) == "1.01");
  CHECK(format_fixed(-1.005, 2) == "-1.01");
  CHECK(format_fixed(9.995, 2) == "10.00");
  CHECK(format_fixed(0.0, 6) == "0.000000");
  CHECK(format_fixed(-0.0000001, 2) == "0.00");
  CHECK(format_fixed(12.0, 0) == "12");
  CHECK(format_fixed(1e-7, 6) == "0.000000");
  CHECK(format_fixed(5e-7, 6) == "0.000001");
}

TEST_CASE("format_percent_compact drops a zero fraction") {
  CHECK(format_percent_compact(100.0) == "100");
  CHECK(format_percent_compact(92.3) == "92.30");
  CHECK(format_percent_compact(88.6875) == "88.69");
  CHECK(format_percent_compact(99.999) == "100");
}

TEST_CASE("error codes carry their names") {
  Error e(ErrorCode::BadMagic, "nope");
  CHECK(e.code() == ErrorCode::BadMagic);
  CHECK(std::string(e.what()) == "nope");
  CHECK(error_code_name(ErrorCode::BadMagic) == "BadMagic");
  CHECK(error_code_name(ErrorCode::NoModelForScanType) == "NoModelForScanType");
  CHECK(error_code_name(ErrorCode::UnknownClassDir) == "UnknownClassDir");
}
