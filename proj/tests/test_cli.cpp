// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "commands.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

using namespace arqlab;

namespace
{

struct Result
{
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::initializer_list<const char *> args)
{
    std::vector<const char *> argv{"arqlab"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string first_line(const std::string &s)
{
    return s.substr(0, s.find('\n'));
}

std::vector<std::string> lines(const std::string &s)
{
    std::vector<std::string> v;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);)
        v.push_back(l);
    return v;
}

std::filesystem::path temp_file(const char *name)
{
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("csv headers")
{
    CHECK(first_line(invoke({"dmt", "--protocol", "GTA"}).out) == "r_e,d,protocol,L,p_t");
    CHECK(first_line(invoke({"gta-recursion", "--users", "3"}).out) == "k,X,J,X_exact,J_exact");
    CHECK(first_line(invoke({"beta", "--seed", "1", "--trials", "100"}).out) ==
          "snr_db,k,l,beta,stderr,beta_highsnr,R,trials,seed");
    CHECK(first_line(invoke({"throughput", "--seed", "1", "--trials", "200", "--protocol", "GTA"}).out) ==
          "snr_db,protocol,L,p_t,r,metric,value,stderr,trials,seed");
    CHECK(first_line(invoke({"delay", "--seed", "1", "--horizon", "2000", "--lambda", "0.3"}).out) ==
          "protocol,K,M,N,L,p_t,r_A,snr_db,lambda,delay,delay_ci,pe,verdict,seed");
    CHECK(first_line(invoke({"stability"}).out) == "protocol,K,M,N,L,p_t,r_A,snr_db,lambda_max,source");
}

TEST_CASE("gta recursion rows")
{
    const auto r = invoke({"gta-recursion", "--users", "4"});
    REQUIRE(r.code == 0);
    const auto v = lines(r.out);
    REQUIRE(v.size() == 6);
    CHECK(v[3] == "2,4,2,4/1,2/1");
    CHECK(v[5].find("136/21,18/7") != std::string::npos);
}

TEST_CASE("stability rows from the high-snr formulas")
{
    const auto r = invoke({"stability", "--protocol", "O-NDMA,GTA", "--users", "2"});
    REQUIRE(r.code == 0);
    const auto v = lines(r.out);
    REQUIRE(v.size() == 3);
    CHECK(v[1] == "O-NDMA,2,1,1,,1,0.45,inf,1,high-snr");
    CHECK(v[2].rfind("GTA,2,1,1,,", 0) == 0);
    CHECK(v[2].find(",0.57735") != std::string::npos);
    CHECK(v[2].find(",high-snr") != std::string::npos);
}

TEST_CASE("usage and configuration errors exit with 2")
{
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"no-such-command"}).code == 2);
    CHECK(invoke({"dmt", "--users", "0"}).code == 2);
    CHECK(invoke({"dmt", "--protocol", ""}).code == 2);
    CHECK(invoke({"dmt", "--protocol", "ALOHA"}).code == 2);
    CHECK(invoke({"dmt", "--pt", "1.5"}).code == 2);
    CHECK(invoke({"dmt", "--rate-mode", "sideways"}).code == 2);

    const auto missing = invoke({"delay", "--lambda", "0.5"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--seed") != std::string::npos);
    CHECK(invoke({"beta"}).code == 2);
    CHECK(invoke({"delay", "--seed", "1", "--lambda", "3.0", "--users", "2"}).code == 2);
    CHECK(invoke({"dmt", "--config", "/nonexistent/arqlab.json"}).code == 2);
}

TEST_CASE("json config with command-line override")
{
    const auto path = temp_file("arqlab_test_cli.json");
    {
        std::ofstream f(path);
        f << R"({"protocol": ["IR-ARQ"], "users": 3, "deadline": [1, 2], "pt": 0.5, "snr_db": [20]})";
    }
    auto r = invoke({"stability", "--config", path.c_str()});
    REQUIRE(r.code == 0);
    auto v = lines(r.out);
    REQUIRE(v.size() == 3);
    CHECK(v[1].rfind("IR-ARQ,3,1,1,1,0.5,", 0) == 0);
    CHECK(v[2].rfind("IR-ARQ,3,1,1,2,0.5,", 0) == 0);

    r = invoke({"stability", "--config", path.c_str(), "--users", "2", "--deadline", "4"});
    REQUIRE(r.code == 0);
    v = lines(r.out);
    REQUIRE(v.size() == 2);
    CHECK(v[1].rfind("IR-ARQ,2,1,1,4,0.5,", 0) == 0);

    {
        std::ofstream f(path);
        f << R"({"users": 2, "colour": "blue"})";
    }
    CHECK(invoke({"stability", "--config", path.c_str()}).code == 2);
    {
        std::ofstream f(path);
        f << "{ not json";
    }
    CHECK(invoke({"stability", "--config", path.c_str()}).code == 2);
    std::filesystem::remove(path);
}

TEST_CASE("output file and determinism across workers")
{
    const auto path = temp_file("arqlab_test_cli.csv");
    const auto a = invoke({"throughput", "--seed", "5", "--trials", "4000", "--protocol", "GTA,IR-ARQ", "--snr-db",
                           "10,20", "--workers", "1"});
    const auto b = invoke({"throughput", "--seed", "5", "--trials", "4000", "--protocol", "GTA,IR-ARQ", "--snr-db",
                           "10,20", "--workers", "3", "--out", path.c_str()});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(b.out.empty());
    std::ifstream f(path);
    std::stringstream file;
    file << f.rdbuf();
    CHECK(file.str() == a.out);
    CHECK(lines(a.out).size() == 1 + 2 * 2 * 2);
    const auto c = invoke({"throughput", "--seed", "6", "--trials", "4000", "--protocol", "GTA,IR-ARQ", "--snr-db",
                           "10,20"});
    CHECK(c.out != a.out);
    std::filesystem::remove(path);
}

TEST_CASE("delay rows carry the analytic curve for ir-arq")
{
    const auto trace = temp_file("arqlab_test_cli.trace");
    const auto r = invoke({"delay", "--protocol", "IR-ARQ", "--seed", "3", "--horizon", "20000", "--lambda", "0.2,0.5",
                           "--trace", trace.c_str()});
    REQUIRE(r.code == 0);
    const auto v = lines(r.out);
    REQUIRE(v.size() == 5);
    int analytic = 0;
    for (const auto &l : v)
        analytic += l.find(",analytic,") != std::string::npos ? 1 : 0;
    CHECK(analytic == 2);
    CHECK(std::filesystem::file_size(trace) > 0);
    std::filesystem::remove(trace);
}

TEST_CASE("pe rows include every user")
{
    const auto r = invoke({"pe", "--protocol", "O-NDMA", "--users", "3", "--seed", "2", "--trials", "2000"});
    REQUIRE(r.code == 0);
    const auto v = lines(r.out);
    REQUIRE(v.size() == 5);
    CHECK(v[1].find(",pe,") != std::string::npos);
    CHECK(v[4].find(",pe_user3,") != std::string::npos);
}
