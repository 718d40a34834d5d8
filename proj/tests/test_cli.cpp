#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coxfuse/report_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

struct CliFixture {
    fs::path dir;
    std::string binary;

    CliFixture() {
        const char* bin = std::getenv("COXFUSE_CLI");
        REQUIRE_MESSAGE(bin != nullptr, "COXFUSE_CLI must point at the binary");
        binary = bin;
        dir = fs::temp_directory_path() /
              ("coxfuse_cli_" + std::to_string(std::rand()) +
               std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(dir);
    }
    ~CliFixture() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    CliResult run(const std::string& args) const {
        const fs::path out_file = dir / "stdout.txt";
        const fs::path err_file = dir / "stderr.txt";
        const std::string cmd = binary + " " + args + " >" + out_file.string() +
                                " 2>" + err_file.string();
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out_file);
        r.err = slurp(err_file);
        return r;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path make_dataset(const std::string& name, std::uint64_t seed) const {
        const fs::path data = dir / name;
        const auto r = run("synth --out " + data.string() +
                           " --samples 60 --layer gex:10 --layer cnv:6"
                           " --planted gex:0:1.5 --planted cnv:2:-1.0"
                           " --censoring 0.2 --seed " + std::to_string(seed));
        REQUIRE_MESSAGE(r.exit_code == 0, r.err);
        return data;
    }

    std::string fast_flags() const {
        return " --k-per-layer 10 --fingerprints 3 --hidden 8 --epochs 15"
               " --folds 3 --repeats 2 --seed 7";
    }
};

}  // namespace

TEST_CASE("cli version and help") {
    const CliFixture cli;
    CHECK(cli.run("--version").exit_code == 0);
    const auto help = cli.run("--help");
    CHECK(help.exit_code == 0);
    for (const char* sub : {"run", "compare", "km", "stability", "synth"})
        CHECK(help.out.find(sub) != std::string::npos);
}

TEST_CASE("synth then run produces a complete report") {
    const CliFixture cli;
    const auto data = cli.make_dataset("data", 3);
    const fs::path out = cli.dir / "out_pca";
    const auto r = cli.run("run --data " + data.string() + " --model pca --out " +
                           out.string() + cli.fast_flags());
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(r.out.find("mean C-index") != std::string::npos);

    const auto rows = coxfuse::report::parse_csv(
        CliFixture::slurp(out / "report.csv"));
    CHECK(rows.size() == 1 + 3 * 2);  // header + folds x repeats
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "manifest.json"));

    // a rerun with the same seed reproduces the bytes
    const fs::path out2 = cli.dir / "out_pca2";
    const auto r2 = cli.run("run --data " + data.string() + " --model pca --out " +
                            out2.string() + cli.fast_flags());
    REQUIRE(r2.exit_code == 0);
    CHECK(CliFixture::slurp(out / "report.csv") ==
          CliFixture::slurp(out2 / "report.csv"));
    CHECK(CliFixture::slurp(out / "report.json") ==
          CliFixture::slurp(out2 / "report.json"));
}

TEST_CASE("config file errors exit with code 2 and name the key") {
    const CliFixture cli;
    const auto data = cli.make_dataset("data", 4);
    const fs::path cfg = cli.dir / "config.json";
    std::ofstream(cfg) << "{\"k_per_layr\": 10}\n";
    const auto r = cli.run("run --data " + data.string() + " --model pca --out " +
                           (cli.dir / "out").string() + " --config " + cfg.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("k_per_layr") != std::string::npos);
}

TEST_CASE("data errors exit with code 3") {
    const CliFixture cli;
    const auto r = cli.run("run --data " + (cli.dir / "nope").string() +
                           " --model pca --out " + (cli.dir / "out").string());
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("not a directory") != std::string::npos);
}

TEST_CASE("a dataset no fold can fit exits with code 4") {
    const CliFixture cli;
    const auto data = cli.make_dataset("data", 5);
    // censor every sample: the cox step has nothing to fit anywhere
    std::ostringstream surv;
    surv << "sample_id\ttime\tevent\n";
    for (int i = 0; i < 60; ++i)
        surv << "S" << (i < 10 ? "0" : "") << i << "\t" << (i + 1) << "\t0\n";
    std::ofstream(data / "survival.tsv") << surv.str();
    const auto r = cli.run("run --data " + data.string() + " --model pca --out " +
                           (cli.dir / "out").string() + cli.fast_flags());
    CHECK(r.exit_code == 4);
    CHECK(r.err.find("all folds failed") != std::string::npos);
}

TEST_CASE("unknown cli arguments exit with code 2") {
    const CliFixture cli;
    CHECK(cli.run("run --fhqwhgads 1").exit_code == 2);
    CHECK(cli.run("run").exit_code == 2);  // missing required options
    // picking a model outside the known set is a usage error
    const auto r = cli.run("run --data x --model forest --out y");
    CHECK(r.exit_code == 2);
}

TEST_CASE("compare ranks two runs of the same dataset") {
    const CliFixture cli;
    const auto data = cli.make_dataset("data", 6);
    const fs::path out_a = cli.dir / "out_a";
    const fs::path out_b = cli.dir / "out_b";
    REQUIRE(cli.run("run --data " + data.string() + " --model pca --out " +
                    out_a.string() + cli.fast_flags())
                .exit_code == 0);
    REQUIRE(cli.run("run --data " + data.string() + " --model sae --out " +
                    out_b.string() + cli.fast_flags())
                .exit_code == 0);

    const fs::path cmp_out = cli.dir / "cmp";
    const auto r = cli.run("compare " + (out_a / "report.json").string() + " " +
                           (out_b / "report.json").string() + " --out " +
                           cmp_out.string());
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    for (const char* name :
         {"ranks.csv", "dataset_means.csv", "pairwise_tests.csv", "violin.csv"}) {
        CAPTURE(name);
        CHECK(fs::exists(cmp_out / name));
    }
    const auto ranks = coxfuse::report::parse_csv(
        CliFixture::slurp(cmp_out / "ranks.csv"));
    REQUIRE(ranks.size() == 3);  // header + two models
    CHECK(r.out.find("pca") != std::string::npos);
    CHECK(r.out.find("sae") != std::string::npos);
}

TEST_CASE("km renders the risk groups of one repeat") {
    const CliFixture cli;
    const auto data = cli.make_dataset("data", 8);
    const fs::path out = cli.dir / "out";
    REQUIRE(cli.run("run --data " + data.string() + " --model pca --out " +
                    out.string() + cli.fast_flags())
                .exit_code == 0);
    const fs::path km_out = cli.dir / "km";
    const auto r = cli.run("km --report " + (out / "report.json").string() +
                           " --data " + data.string() + " --out " + km_out.string() +
                           " --repeat 1");
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    CHECK(fs::exists(km_out / "km.csv"));
    const auto svg = CliFixture::slurp(km_out / "km.svg");
    CHECK(svg.rfind("<svg", 0) == 0);

    // a repeat beyond the report is a usage error
    CHECK(cli.run("km --report " + (out / "report.json").string() + " --data " +
                  data.string() + " --out " + km_out.string() + " --repeat 9")
              .exit_code == 2);
}

TEST_CASE("stability tallies selections across refits") {
    const CliFixture cli;
    const auto data = cli.make_dataset("data", 9);
    const fs::path out = cli.dir / "stab";
    const auto r = cli.run("stability --data " + data.string() +
                           " --model csae --out " + out.string() + " --runs 4" +
                           cli.fast_flags());
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    const auto layers = coxfuse::report::parse_csv(
        CliFixture::slurp(out / "layer_counts.csv"));
    REQUIRE(layers.size() >= 2);
    CHECK(layers[0] ==
          std::vector<std::string>{"layer", "width", "count", "normalized"});
    std::size_t total = 0;
    for (std::size_t i = 1; i < layers.size(); ++i)
        total += std::stoul(layers[i][2]);
    CHECK(total == 4 * 3);  // runs x fingerprints

    const auto feats = coxfuse::report::parse_csv(
        CliFixture::slurp(out / "feature_frequency.csv"));
    CHECK(feats.size() >= 2);
}

TEST_CASE("synth validates its spec through exit codes") {
    const CliFixture cli;
    const auto bad_layer = cli.run("synth --out " + (cli.dir / "x").string() +
                                   " --layer gex:0");
    CHECK(bad_layer.exit_code == 2);
    const auto bad_planted =
        cli.run("synth --out " + (cli.dir / "y").string() +
                " --layer gex:5 --planted meth:0:1.0");
    CHECK(bad_planted.exit_code == 2);
    CHECK(bad_planted.err.find("meth") != std::string::npos);
}
