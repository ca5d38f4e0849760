#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
    fs::path dir = fs::temp_directory_path() / ("siv_cli_" + std::to_string(::getpid()));
    Scratch() {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

const fs::path& root() {
    static const Scratch scratch;
    return scratch.dir;
}

struct Run {
    int code = -1;
    std::string err;
};

Run run(const std::string& args) {
    const fs::path err = root() / "stderr.txt";
    const std::string cmd = std::string(SPARSE_IV_BIN) + " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

// Every regular file under a, compared byte for byte with its twin under b.
void same_tree(const fs::path& a, const fs::path& b) {
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), a);
        CAPTURE(rel.string());
        REQUIRE(fs::exists(b / rel));
        CHECK(slurp(e.path()) == slurp(b / rel));
        ++files;
    }
    CHECK(files > 0);
}

std::string out(const std::string& name) { return (root() / name).string(); }

// y = 2 x1 - x2 exactly, with x an exact linear function of z.
fs::path noiseless_fixture() {
    const fs::path dir = root() / "noiseless";
    if (fs::exists(dir / "z.csv")) return dir;
    fs::create_directories(dir);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd;
    std::ofstream fy(dir / "y.csv"), fx(dir / "x.csv"), fz(dir / "z.csv");
    fy.precision(17);
    fx.precision(17);
    fz.precision(17);
    fy << "y\n";
    fx << "x1,x2\n";
    fz << "z1,z2,z3,z4\n";
    for (int i = 0; i < 200; ++i) {
        double z[4];
        for (double& v : z) v = nd(rng);
        const double x1 = z[0] + 0.5 * z[1], x2 = z[2] - z[3];
        fy << 2.0 * x1 - x2 << "\n";
        fx << x1 << "," << x2 << "\n";
        fz << z[0] << "," << z[1] << "," << z[2] << "," << z[3] << "\n";
    }
    return dir;
}

const std::string kSmall = "--n 80 --p 8 --q 15 --r 2 --s 2 --n-confounded 3";

fs::path small_dataset() {
    const fs::path dir = root() / "small";
    if (!fs::exists(dir / "truth.json")) REQUIRE(run("simulate " + kSmall + " --seed 5 --out " + dir.string()).code == 0);
    return dir;
}

std::vector<double> beta_column(const fs::path& p) {
    std::vector<double> v;
    const auto ls = lines(p);
    for (std::size_t i = 1; i < ls.size(); ++i) v.push_back(std::stod(ls[i].substr(ls[i].find(',') + 1)));
    return v;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("").code == 2);
    CHECK(run("bogus").code == 2);
    CHECK(run("simulate --model 9 --out " + out("bad")).code == 2);
    const Run r = run("fit --out " + out("nodata"));
    CHECK(r.code == 2);
    CHECK(r.err.find("--dataset") != std::string::npos);
}

TEST_CASE("row mismatch names both files") {
    const fs::path dir = root() / "mismatch";
    fs::create_directories(dir);
    std::ofstream fy(dir / "y.csv"), fx(dir / "x.csv"), fz(dir / "z.csv");
    fy << "y\n";
    fx << "x1\n";
    fz << "z1\n";
    for (int i = 0; i < 200; ++i) {
        fy << i % 7 << "\n";
        if (i < 199) fx << i % 5 << "\n";
        fz << i % 3 << "\n";
    }
    fy.close();
    fx.close();
    fz.close();
    const Run r = run("fit --y " + (dir / "y.csv").string() + " --x " + (dir / "x.csv").string() + " --z " +
                      (dir / "z.csv").string() + " --out " + out("mismatch_out"));
    CHECK(r.code == 2);
    CHECK(r.err.find((dir / "x.csv").string()) != std::string::npos);
    CHECK(r.err.find((dir / "y.csv").string()) != std::string::npos);
    CHECK(r.err.find("199") != std::string::npos);
}

TEST_CASE("malformed csv reports the line") {
    const fs::path dir = root() / "malformed";
    fs::create_directories(dir);
    std::ofstream(dir / "y.csv") << "y\n1\n2\n3\n";
    std::ofstream(dir / "x.csv") << "x1\n1\nfoo\n3\n";
    std::ofstream(dir / "z.csv") << "z1\n1\n0\n1\n";
    const Run r = run("fit --dataset " + dir.string() + " --out " + out("malformed_out"));
    CHECK(r.code == 2);
    CHECK(r.err.find("x.csv:3") != std::string::npos);
}

TEST_CASE("noiseless fixture recovers beta") {
    const fs::path dir = noiseless_fixture();
    REQUIRE(run("fit --dataset " + dir.string() + " --penalty mcp --out " + out("nl_mcp")).code == 0);
    auto b = beta_column(root() / "nl_mcp" / "beta.csv");
    REQUIRE(b.size() == 2);
    CHECK(std::abs(b[0] - 2.0) < 1e-3);
    CHECK(std::abs(b[1] + 1.0) < 1e-3);

    REQUIRE(run("fit --dataset " + dir.string() + " --lambda 1e-8 --mu 1e-8 --full-beta --out " + out("nl_fixed")).code ==
            0);
    b = beta_column(root() / "nl_fixed" / "beta.csv");
    REQUIRE(b.size() == 2);
    CHECK(std::abs(b[0] - 2.0) < 1e-3);
    CHECK(std::abs(b[1] + 1.0) < 1e-3);
}

TEST_CASE("fit writes the documented outputs") {
    const fs::path data = small_dataset();
    REQUIRE(run("fit --dataset " + data.string() + " --cv-folds 3 --grid-size 10 --out " + out("fit")).code == 0);
    const json s = json::parse(slurp(root() / "fit" / "summary.json"));
    CHECK(s.at("model_size").get<int>() >= 0);
    CHECK(s.at("lambdas").size() == 8);
    CHECK(s.contains("mu"));
    CHECK(s.contains("adjusted_r2"));
    CHECK(s.contains("dead_columns"));
    CHECK_FALSE(s.contains("timings"));
    CHECK(lines(root() / "fit" / "beta.csv").at(0) == "index,coefficient");
    CHECK(lines(root() / "fit" / "gamma.csv").at(0).find(',') != std::string::npos);

    REQUIRE(run("fit --dataset " + data.string() + " --cv-folds 3 --grid-size 10 --timings --out " + out("fit_t")).code ==
            0);
    CHECK(json::parse(slurp(root() / "fit_t" / "summary.json")).contains("timings"));

    REQUIRE(run("fit --dataset " + data.string() + " --method pls --cv-folds 3 --grid-size 10 --out " + out("fit_pls"))
                .code == 0);
    CHECK_FALSE(fs::exists(root() / "fit_pls" / "gamma.csv"));
}

TEST_CASE("simulate writes preset shapes") {
    REQUIRE(run("simulate --model 2 --seed 3 --out " + out("m2")).code == 0);
    const auto y = lines(root() / "m2" / "y.csv"), x = lines(root() / "m2" / "x.csv"), z = lines(root() / "m2" / "z.csv");
    CHECK(y.size() == 401);
    CHECK(x.size() == 401);
    CHECK(z.size() == 401);
    CHECK(std::count(x[0].begin(), x[0].end(), ',') == 199);
    CHECK(std::count(z[1].begin(), z[1].end(), ',') == 199);
    const json t = json::parse(slurp(root() / "m2" / "truth.json"));
    CHECK(t.at("support").size() == 5);
}

TEST_CASE("benchmark table layout for model 1") {
    REQUIRE(run("benchmark --model 1 --replicates 2 --folds 3 --grid-size 10 --out " + out("bench")).code == 0);
    const auto rows = lines(root() / "bench" / "table.csv");
    REQUIRE(rows.size() == 1 + 8 * 5);
    CHECK(rows[0] == "model,method,penalty,metric,mean,sd,replicates_ok");
    std::set<std::string> methods;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::stringstream ss(rows[i]);
        std::string model, method, penalty;
        std::getline(ss, model, ',');
        std::getline(ss, method, ',');
        std::getline(ss, penalty, ',');
        CHECK(model == "model1");
        methods.insert(method + "/" + penalty);
    }
    CHECK(methods.size() == 8);
}

TEST_CASE("curve output is plot ready") {
    REQUIRE(run("curve --model 1 " + kSmall + " --n-values 60,90 --replicates 2 --folds 3 --grid-size 8 --out " +
                out("curve"))
                .code == 0);
    const auto rows = lines(root() / "curve" / "curve.csv");
    REQUIRE(rows.size() == 1 + 2 * 8 * 5);
    CHECK(rows[0].rfind("n,method,penalty,metric,mean,sd", 0) == 0);
    CHECK(rows[1].rfind("60,", 0) == 0);
    CHECK(rows.back().rfind("90,", 0) == 0);
    CHECK(run("curve --model 1 --n-values 90,60 --replicates 1 --out " + out("curve_bad")).code == 2);
}

TEST_CASE("stability outputs") {
    const fs::path data = small_dataset();
    REQUIRE(run("stability --dataset " + data.string() + " --B 1 --grid-size 5 --cv-folds 3 --threshold 0 --out " +
                out("stab1"))
                .code == 0);
    const auto probs = lines(root() / "stab1" / "stability.csv");
    REQUIRE(probs.size() == 1 + 8 * 5);
    for (std::size_t i = 1; i < probs.size(); ++i) {
        const std::string v = probs[i].substr(probs[i].rfind(',') + 1);
        CHECK((v == "0" || v == "1"));
    }
    CHECK(lines(root() / "stab1" / "selected.csv").size() == 1 + 8);
}

TEST_CASE("stability reproduces the stored golden file") {
    const fs::path data = root() / "golden_data";
    REQUIRE(run("simulate --n 60 --p 6 --q 10 --r 2 --s 2 --n-confounded 3 --seed 11 --out " + data.string()).code == 0);
    REQUIRE(run("--threads 2 stability --dataset " + data.string() +
                " --B 20 --grid-size 6 --cv-folds 3 --seed 4 --out " + out("golden"))
                .code == 0);
    CHECK(slurp(root() / "golden" / "stability.csv") == slurp(fs::path(GOLDEN_DIR) / "stability.csv"));
}

TEST_CASE("diagnose exit codes and report") {
    const fs::path data = small_dataset();
    const Run wide = run("diagnose --dataset " + data.string() + " --re-mode exact --out " + out("diag_exact"));
    CHECK(wide.code == 4);
    CHECK(wide.err.find("approx") != std::string::npos);

    REQUIRE(run("diagnose --dataset " + data.string() + " --re-mode approx --draws 2000 --out " + out("diag")).code ==
            0);
    const json d = json::parse(slurp(root() / "diag" / "diagnostics.json"));
    CHECK_FALSE(d.at("exact").get<bool>());
    CHECK(d.contains("irrep_norm"));
    CHECK(d.contains("least_false"));

    CHECK(run("diagnose --dataset " + (root() / "missing").string() + " --out " + out("diag_missing")).code == 2);
}

TEST_CASE("commands are byte-reproducible across runs and thread counts") {
    const fs::path data = small_dataset();
    const std::vector<std::string> commands = {
        "fit --dataset " + data.string() + " --penalty scad --cv-folds 4 --grid-size 12 --out ",
        "fit --dataset " + data.string() + " --method pls --cv-folds 4 --grid-size 12 --out ",
        "simulate " + kSmall + " --seed 9 --out ",
        "benchmark --model 1 " + kSmall + " --replicates 3 --folds 3 --grid-size 8 --out ",
        "curve --model 1 " + kSmall + " --n-values 60,80 --replicates 2 --folds 3 --grid-size 8 --out ",
        "stability --dataset " + data.string() + " --B 12 --grid-size 6 --cv-folds 3 --out ",
        "diagnose --dataset " + data.string() + " --re-mode approx --draws 3000 --out ",
    };
    int k = 0;
    for (const std::string& c : commands) {
        CAPTURE(c);
        const std::string tag = "repro" + std::to_string(k++);
        REQUIRE(run("--threads 1 " + c + out(tag + "_a")).code == 0);
        REQUIRE(run("--threads 1 " + c + out(tag + "_b")).code == 0);
        REQUIRE(run("--threads 4 " + c + out(tag + "_c")).code == 0);
        same_tree(root() / (tag + "_a"), root() / (tag + "_b"));
        same_tree(root() / (tag + "_a"), root() / (tag + "_c"));
    }
    ::setenv("SPARSE_IV_THREADS", "3", 1);
    REQUIRE(run(commands[0] + out("repro_env")).code == 0);
    ::unsetenv("SPARSE_IV_THREADS");
    same_tree(root() / "repro0_a", root() / "repro_env");
}
