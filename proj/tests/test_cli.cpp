#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

// End-to-end checks of the installed command-line surface; the binary path is
// injected by the build.
#ifndef JETCRIT_BIN
#error "JETCRIT_BIN must point at the CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
    const std::string cmd = std::string(JETCRIT_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "jetcrit_cli_test";
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("missing and malformed model files exit with the config code") {
    CHECK(run("sweep --alphas 100 --model /nonexistent/model.json --out " +
              (temp_dir() / "x").string()) == 2);

    const fs::path empty = temp_dir() / "empty.json";
    std::ofstream(empty).close();
    CHECK(run("solve --alpha 100 --lambda 1 --model " + empty.string()) == 2);
}

TEST_CASE("unknown flags exit with the config code") {
    CHECK(run("solve --alpha 100 --lambda 1 --frobnicate") == 2);
    CHECK(run("") == 2);  // a subcommand is required
}

TEST_CASE("solve writes the documented profile columns") {
    const fs::path out = temp_dir() / "profile.csv";
    REQUIRE(run("solve --alpha 0 --lambda 1 --out " + out.string()) == 0);
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "y,r,v,g_of_v");
}

TEST_CASE("solve reports blow-up with the numerical failure code") {
    // The flat-profile model has its classical fold at 2; the default jet
    // model concentrates the reaction and folds later.
    const fs::path model = temp_dir() / "flat.json";
    std::ofstream(model) << R"({"nonlinearity":{"kind":"exp"},"phi":{"kind":"const"},)"
                         << R"("psi":{"kind":"const"},"sc":0.75})";
    CHECK(run("solve --alpha 0 --lambda 3 --model " + model.string()) == 1);
    CHECK(run("solve --alpha 0 --lambda 1.5 --model " + model.string()) == 0);
}

TEST_CASE("stability and bounds emit json") {
    const fs::path out = temp_dir() / "stab.json";
    REQUIRE(run("stability --alpha 0 --lambda 1 --out " + out.string()) == 0);
    std::ifstream in(out);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.find("kappa1") != std::string::npos);
    CHECK(body.find("semi_stable") != std::string::npos);

    CHECK(run("bounds --alpha 1000 --out " + (temp_dir() / "bounds.json").string()) == 0);
}

TEST_CASE("certify passes well below the fold") {
    CHECK(run("certify --alpha 1000 --lambda 5 --w 2") == 0);
    CHECK(run("certify --alpha 1000 --lambda 100000 --w 2") == 1);
}

TEST_CASE("selfcheck runs clean") { CHECK(run("selfcheck") == 0); }
