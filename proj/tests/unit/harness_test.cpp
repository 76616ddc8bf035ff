#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "telescale/error.hpp"
#include "telescale/harness.hpp"
#include "telescale/report.hpp"

using namespace telescale;

TEST_SUITE("harness") {
    TEST_CASE("noise-free unit gain at zero delay finishes without errors") {
        const TrialRecord r = run_trial(builtin_scenario("zero_delay_perfect"), 1);
        CHECK_FALSE(r.timed_out);
        CHECK(r.completion_time_s > 0.0);
        CHECK(r.events.empty());
        CHECK(r.weighted_error == 0);
        CHECK(r.scenario == "zero_delay_perfect");
        CHECK(r.seed == 1);
    }

    TEST_CASE("same scenario and seed give identical records") {
        Scenario s = builtin_scenario("const-0.3");
        s.round_trip_s = 0.75;
        const TrialRecord a = run_trial(s, 4);
        const TrialRecord b = run_trial(s, 4);
        CHECK(a == b);
        CHECK(a.weighted_error == weighted_error(a.events));
    }

    TEST_CASE("unreachable pegs time out") {
        const Scenario s = builtin_scenario("unreachable");
        const TrialRecord r = run_trial(s, 1);
        CHECK(r.timed_out);
        CHECK(r.completion_time_s == doctest::Approx(s.timeout_s));
        CHECK(r.weighted_error == weighted_error(r.events));
    }

    TEST_CASE("trajectory log is written on request") {
        const auto path = std::filesystem::temp_directory_path() / "telescale-trajectory.csv";
        TrialOptions options;
        options.trajectory_path = path;
        options.trajectory_stride = 100;
        const TrialRecord r = run_trial(builtin_scenario("zero_delay_perfect"), 1, options);
        CHECK(r.trajectory_log == path.string());
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "tick,left_x,left_y,left_z,right_x,right_y,right_z");
        std::filesystem::remove(path);
    }

    TEST_CASE("a study runs every condition for every seed") {
        const auto conditions = preset_conditions("preset5", 0.0);
        const auto seeds = seed_range(17);
        CHECK(seeds.front() == 1);
        CHECK(seeds.back() == 17);
        const auto records = run_study(conditions, seeds);
        REQUIRE(records.size() == 85);
        for (std::size_t c = 0; c < conditions.size(); ++c) {
            for (std::size_t i = 0; i < seeds.size(); ++i) {
                const auto& r = records[c * seeds.size() + i];
                CHECK(r.scenario == conditions[c].id);
                CHECK(r.seed == seeds[i]);
            }
        }
        const std::vector<Scenario> one{conditions[1]};
        CHECK(run_study(one, seeds).size() == 17);
    }

    TEST_CASE("worker count does not change results") {
        const auto conditions = preset_conditions("preset5", 0.75);
        const auto seeds = seed_range(3);
        CHECK(run_study(conditions, seeds, 1) == run_study(conditions, seeds, 4));
    }

    TEST_CASE("empty study inputs are errors") {
        const auto conditions = preset_conditions("preset5", 0.0);
        CHECK_THROWS_AS(run_study(conditions, {}), ConfigError);
        const auto seeds = seed_range(2);
        CHECK_THROWS_AS(run_study({}, seeds), ConfigError);
    }
}

TEST_SUITE("report") {
    namespace {
    std::vector<TrialRecord> sample_records() {
        std::vector<TrialRecord> out;
        const char* names[] = {"const-0.3", "const-0.2", "const-0.1", "positional", "velocity"};
        for (int c = 0; c < 5; ++c) {
            for (std::uint64_t seed = 1; seed <= 17; ++seed) {
                TrialRecord r;
                r.scenario = names[c];
                r.seed = seed;
                r.completion_time_s = 60.0 + 10.0 * c + static_cast<double>(seed % 5);
                for (int k = 0; k < static_cast<int>((seed + c) % 3); ++k) {
                    r.events.push_back(ErrorEvent::make(ErrorKind::TouchGround, 100 * k + 5, "gripper_left"));
                }
                r.weighted_error = weighted_error(r.events);
                out.push_back(r);
            }
        }
        return out;
    }
    }  // namespace

    TEST_CASE("csv export") {
        const auto records = sample_records();
        const std::string csv = to_csv(to_rows(records));
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 86);
        CHECK(csv.rfind("scenario,seed,time_s,weighted_error,n_events\n", 0) == 0);
        CHECK(parse_csv(csv) == to_rows(records));
        CHECK(to_csv({}) == "scenario,seed,time_s,weighted_error,n_events\n");
    }

    TEST_CASE("json export round-trips records") {
        const auto records = sample_records();
        CHECK(records_from_json(records_to_json(records)) == records);
        const auto path = std::filesystem::temp_directory_path() / "telescale-records.json";
        write_json(path, records);
        CHECK(read_json(path) == records);
        std::filesystem::remove(path);
    }

    TEST_CASE("write failures name the path") {
        const std::filesystem::path bad = "/nonexistent-dir/out.csv";
        try {
            write_csv(bad, to_rows(sample_records()));
            FAIL("expected IoError");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
        }
    }

    TEST_CASE("summary statistics") {
        const auto records = sample_records();
        const StudyTable table = summarize(records);
        REQUIRE(table.rows.size() == 5);
        CHECK(table.rows[0].scenario == "const-0.3");
        const auto* low = table.find("const-0.1");
        REQUIRE(low != nullptr);
        CHECK(low->n == 17);
        CHECK(low->time_mean == doctest::Approx(80.0 + (1 + 2 + 3 + 4 + 0) * 3.0 / 17.0 + (1 + 2) / 17.0));
        REQUIRE(low->error_vs_high.has_value());
        CHECK(low->error_vs_high->pairs == 17);
        CHECK_FALSE(table.find("const-0.3")->error_vs_high.has_value());
        CHECK(table.find("const-0.3")->error_vs_mid.has_value());
    }

    TEST_CASE("all-zero errors summarize to 0 +- 0 and equal outcomes give p = 1") {
        std::vector<TrialRow> rows;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            rows.push_back({"const-0.3", seed, 50.0 + seed, 0, 0});
            rows.push_back({"velocity", seed, 50.0 + seed, 0, 0});
        }
        const StudyTable table = summarize(rows);
        const auto* v = table.find("velocity");
        REQUIRE(v != nullptr);
        CHECK(v->error_mean == 0.0);
        CHECK(v->error_std == 0.0);
        CHECK(v->time_vs_high->p == 1.0);
        CHECK(v->error_vs_high->p == 1.0);
        CHECK(table.find("const-0.2") == nullptr);
        CHECK_FALSE(v->error_vs_mid.has_value());
    }

    TEST_CASE("summary ignores record order") {
        auto records = sample_records();
        const StudyTable a = summarize(records);
        std::reverse(records.begin(), records.end());
        std::rotate(records.begin(), records.begin() + 13, records.end());
        CHECK(summarize(records) == a);
    }

    TEST_CASE("rendered table has the expected columns") {
        const std::string text = render_table(summarize(sample_records()));
        CHECK(text.find("error") != std::string::npos);
        CHECK(text.find("time (s)") != std::string::npos);
        CHECK(text.find("p vs const-0.3") != std::string::npos);
        CHECK(text.find("p vs const-0.2") != std::string::npos);
        CHECK(text.find("velocity") != std::string::npos);
    }
}
