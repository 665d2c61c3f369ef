#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include "wsdist/wsdist.h"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(WSDIST_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// A 12x12x2 phantom: class 1 on the left, class 2 on the right, a bright
// stripe between them.
struct Fixture {
    fs::path dir = fs::temp_directory_path() / ("wsdist_cli_" + std::to_string(::getpid()));
    std::string image, full, weak, probs, maps;

    Fixture() {
        fs::create_directories(dir);
        image = (dir / "image.npy").string();
        full = (dir / "full.npy").string();
        weak = (dir / "weak.npy").string();
        probs = (dir / "probs.npy").string();
        maps = (dir / "maps").string();

        const wsdist_grid g{3, {12, 12, 2}, {1.0, 1.0, 3.0}};
        std::vector<double> img(288);
        std::vector<int32_t> lab(288);
        for (std::size_t i = 0; i < 288; ++i) {
            const std::size_t c = (i / 2) % 12;
            img[i] = c == 6 ? 200.0 : 10.0 + static_cast<double>(i % 7);
            lab[i] = c < 5 ? 1 : (c > 7 ? 2 : 0);
        }
        wsdist_image* im = nullptr;
        REQUIRE(wsdist_image_create(&g, 1, img.data(), &im) == WSDIST_OK);
        REQUIRE(wsdist_image_write(im, image.c_str()) == WSDIST_OK);
        wsdist_image_free(im);
        wsdist_labels* lb = nullptr;
        REQUIRE(wsdist_labels_create(&g, 3, lab.data(), &lb) == WSDIST_OK);
        REQUIRE(wsdist_labels_write(lb, full.c_str(), 0, 0) == WSDIST_OK);
        wsdist_labels_free(lb);

        std::vector<double> p(3 * 288);
        for (std::size_t i = 0; i < 288; ++i) {
            p[i] = 0.5;
            p[288 + i] = 0.3;
            p[576 + i] = 0.2;
        }
        wsdist_probs* pr = nullptr;
        REQUIRE(wsdist_probs_create(&g, 3, p.data(), &pr) == WSDIST_OK);
        REQUIRE(wsdist_probs_write(pr, probs.c_str()) == WSDIST_OK);
        wsdist_probs_free(pr);
    }
    ~Fixture() { fs::remove_all(dir); }
};

} // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run("--help").code == 0);
    CHECK(run("").code == 2);
    CHECK(run("--bogus").code == 2);
    CHECK(run("distmap --image a --labels b").code == 2);
    CHECK(run("distmap --image a --labels b --out c --kind mbd --engine raster").code == 2);
    CHECK(run("distmap --image a --labels b --out c --kind euc --mix 0.2").code == 2);
    CHECK(run("distmap --image a --labels b --out c --kind nope").code == 2);
    CHECK(run("distmap --image a --labels b --out c --absent const:-1").code == 2);
    CHECK(run("bench --size-2d 3").code == 2);
}

TEST_CASE("runtime errors exit with 1") {
    CHECK(run("distmap --image /nonexistent.npy --labels /nonexistent.npy --out /tmp/x").code == 1);
}

TEST_CASE("end-to-end pipeline") {
    Fixture fx;

    auto points = run("--json points --labels " + fx.full + " --out " + fx.weak + " --seed 5");
    REQUIRE(points.code == 0);
    CHECK(nlohmann::json::parse(points.out)["seed"] == 5);
    REQUIRE(fs::exists(fx.weak));

    auto again = fx.dir / "weak2.npy";
    REQUIRE(run("points --labels " + fx.full + " --out " + again.string() + " --seed 5").code == 0);
    wsdist_labels *a = nullptr, *b = nullptr;
    REQUIRE(wsdist_labels_read(fx.weak.c_str(), 3, &a) == WSDIST_OK);
    REQUIRE(wsdist_labels_read(again.c_str(), 3, &b) == WSDIST_OK);
    std::vector<int32_t> va(288), vb(288);
    wsdist_labels_copy(a, va.data(), 288);
    wsdist_labels_copy(b, vb.data(), 288);
    CHECK(va == vb);
    wsdist_labels_free(a);
    wsdist_labels_free(b);

    auto dm = run("distmap --json --image " + fx.image + " --labels " + fx.weak + " --out " + fx.maps +
                  " --kind geo --mix 0.5 --engine raster --passes 8");
    REQUIRE(dm.code == 0);
    const auto files = nlohmann::json::parse(dm.out)["files"];
    CHECK(files.size() == 2);
    CHECK(fs::exists(fs::path(fx.maps) / "class_1.npy"));
    CHECK(fs::exists(fs::path(fx.maps) / "class_2.json"));
    CHECK(run("distmap --image " + fx.image + " --labels " + fx.weak + " --out " + fx.maps +
              " --kind mbd --dims 3d --connectivity faces")
              .code == 0);

    auto loss = run("loss --json --probs " + fx.probs + " --weak-labels " + fx.weak + " --maps " + fx.maps +
                    " --alpha 0.1");
    REQUIRE(loss.code == 0);
    const auto lj = nlohmann::json::parse(loss.out);
    CHECK(lj["alpha"] == 0.1);
    CHECK(lj["total"].get<double>() ==
          doctest::Approx(lj["cross_entropy"].get<double>() + 0.1 * lj["boundary"].get<double>()));

    auto report = fx.dir / "report.json";
    auto met = run("metrics --json --gt " + fx.full + " --pred " + fx.full + " --out " + report.string());
    REQUIRE(met.code == 0);
    const auto mj = nlohmann::json::parse(met.out);
    CHECK(mj["overall"]["dsc"] == 1.0);
    CHECK(mj["overall"]["hd95"] == 0.0);
    CHECK(fs::exists(report));
    CHECK(run("metrics --gt " + fx.full).code == 2);
}

TEST_CASE("bench prints a table or json") {
    auto table = run("bench --reps 1 --size-2d 16,16 --size-3d 8,8,4");
    REQUIRE(table.code == 0);
    CHECK(table.out.find("mbd") != std::string::npos);
    auto json = run("bench --reps 1 --size-2d 16,16 --size-3d 8,8,4 --json");
    REQUIRE(json.code == 0);
    CHECK(nlohmann::json::parse(json.out)["rows"].size() == 4);
}
