#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "resque/experiment.hpp"

using namespace resque;

namespace {

std::string write_temp_config(const std::string& body) {
    const std::string path = "harness_test_config.cfg";
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("config parsing: keys, comments, seed lists, overrides") {
    const std::string path = write_temp_config(
        "# comment line\n"
        "mode = parallel\n"
        "problem = distance_to_point\n"
        "d = 4\n"
        "eps_opt = 0.25   # trailing comment\n"
        "seeds = 3,5,9\n"
        "C_ba = 4\n"
        "timing = 0\n");
    auto cfg = load_config(path);
    REQUIRE(cfg.mode == "parallel");
    REQUIRE(cfg.problem == "distance_to_point");
    REQUIRE(cfg.d == 4);
    REQUIRE(cfg.eps_opt == 0.25);
    REQUIRE(cfg.seeds == std::vector<std::uint64_t>{3, 5, 9});
    REQUIRE(cfg.constants.C_ba == 4.0);
    REQUIRE(!cfg.timing);

    // flag overrides win
    apply_config_entry(cfg, "eps_opt", "0.5");
    apply_config_entry(cfg, "num_seeds", "2");
    REQUIRE(cfg.eps_opt == 0.5);
    REQUIRE(cfg.seeds == std::vector<std::uint64_t>{1, 2});

    REQUIRE_THROWS_AS(apply_config_entry(cfg, "bogus_key", "1"), std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("parallel experiment reruns are byte-identical") {
    ExperimentConfig cfg;
    cfg.mode = "parallel";
    cfg.problem = "distance_to_point";
    cfg.d = 3;
    cfg.eps_opt = 0.5;
    cfg.seeds = {1, 2, 3};
    cfg.constants.C_ba = 3.0;
    cfg.constants.stop_A_factor = 1.1;
    cfg.constants.ls_replicas = 3;
    cfg.constants.call_query_cap = 1 << 14;

    const RunReport a = run_experiment(cfg);
    const RunReport b = run_experiment(cfg);
    REQUIRE(to_csv(a) == to_csv(b));
    REQUIRE(a.rows.size() == 3);
    for (const auto& row : a.rows) {
        REQUIRE(row.seconds == 0.0);  // timing off by default
        REQUIRE(row.error >= 0.0);
        REQUIRE(row.total > 0);
    }
    REQUIRE(to_csv(a).rfind("seed,error,depth,total,comp_depth,comp_work,eps_total,"
                            "delta_total,seconds\n",
                            0) == 0);
}

TEST_CASE("experiment rows are independent of worker interleaving") {
    ExperimentConfig cfg;
    cfg.mode = "parallel";
    cfg.problem = "max_linear";
    cfg.d = 2;
    cfg.eps_opt = 0.5;
    cfg.seeds = {4, 5};
    cfg.constants.C_ba = 3.0;
    cfg.constants.call_query_cap = 1 << 14;

    setenv("RESQUE_THREADS", "1", 1);
    const RunReport serial = run_experiment(cfg);
    setenv("RESQUE_THREADS", "2", 1);
    const RunReport threaded = run_experiment(cfg);
    unsetenv("RESQUE_THREADS");
    REQUIRE(to_csv(serial) == to_csv(threaded));
}

TEST_CASE("dp_erm experiment emits privacy totals within budget") {
    ExperimentConfig cfg;
    cfg.mode = "dp_erm";
    cfg.n = 512;
    cfg.d = 4;
    cfg.eps_dp = 1.0;
    cfg.delta = 1e-5;
    cfg.seeds = {1, 2};
    cfg.constants.C = 0.05;
    cfg.constants.C_priv = 0.0005;
    cfg.constants.mlmc_level_cap = 2;
    cfg.constants.ls_probe_cap = 1;
    cfg.constants.stop_A_factor = 8.0;
    cfg.constants.t2_floor = 24.0;

    const RunReport rep = run_experiment(cfg);
    REQUIRE(rep.rows.size() == 2);
    for (const auto& row : rep.rows) {
        REQUIRE(row.eps_total <= 1.0);
        REQUIRE(row.delta_total <= 1e-5);
        REQUIRE(row.total > 0);
    }
    // constants are recorded in the summary for auditability
    REQUIRE(rep.summary.find("C_priv=0.0005") != std::string::npos);
}

TEST_CASE("verify suites run and pass") {
    REQUIRE(verify_accountant().ok());
    REQUIRE(verify_aggregation(100, 3).ok());
    REQUIRE(verify_mlmc(1500, 5).ok());
    REQUIRE_THROWS_AS(verify_suite("nonsense"), std::invalid_argument);
}

TEST_CASE("csv writing reaches disk when out path is set") {
    ExperimentConfig cfg;
    cfg.mode = "parallel";
    cfg.problem = "distance_to_point";
    cfg.d = 2;
    cfg.eps_opt = 0.5;
    cfg.seeds = {1};
    cfg.constants.C_ba = 3.0;
    cfg.constants.call_query_cap = 1 << 14;
    cfg.out_path = "harness_test_out.csv";
    run_experiment(cfg);
    std::ifstream in(cfg.out_path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    REQUIRE(header == csv_header());
    std::remove(cfg.out_path.c_str());
    std::remove((cfg.out_path + ".summary.txt").c_str());
}
