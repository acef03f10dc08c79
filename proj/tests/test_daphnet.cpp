#include <doctest.h>

#include <string>
#include <vector>

#include "fogrl/daphnet.hpp"
#include "fogrl/errors.hpp"
#include "fogrl/io_util.hpp"
#include "fogrl/rng.hpp"
#include "test_util.hpp"

using namespace fogrl;

namespace {

RawTrial trial_from_annotations(const std::vector<int>& anns, double rate_hz = 1.0) {
  RawTrial t;
  t.subject_id = 1;
  t.run_id = 1;
  t.sample_rate_hz = rate_hz;
  const auto dt = static_cast<std::int64_t>(1000.0 / rate_hz);
  for (std::size_t i = 0; i < anns.size(); ++i) {
    Sample s;
    s.t_ms = static_cast<std::int64_t>(i) * dt;
    s.channels = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    s.annotation = anns[i];
    t.samples.push_back(s);
  }
  return t;
}

}  // namespace

TEST_CASE("parse_trial maps fields directly") {
  const auto dir = test_dir("daphnet_parse");
  write_text_file(dir / "S01R01.txt",
                  "15000 70 39 970 100 200 300 400 500 600 1\n"
                  "15015 71 40 971 101 201 301 401 501 601 2\n");
  const RawTrial t = parse_trial(dir / "S01R01.txt");
  CHECK(t.subject_id == 1);
  CHECK(t.run_id == 1);
  REQUIRE(t.samples.size() == 2);
  CHECK(t.samples[0].t_ms == 15000);
  CHECK(t.samples[0].channels[0] == 70.0);
  CHECK(t.samples[0].channels[8] == 600.0);
  CHECK(t.samples[0].annotation == static_cast<int>(Annotation::NoFreeze));
  CHECK(t.samples[1].annotation == static_cast<int>(Annotation::Freeze));
}

TEST_CASE("parse_trial reports the offending line") {
  const auto dir = test_dir("daphnet_badline");
  std::string content;
  for (int i = 0; i < 6; ++i)
    content += std::to_string(1000 + i * 15) + " 1 2 3 4 5 6 7 8 9 1\n";
  content += "1090 1 2 oops 4 5 6 7 8 9 1\n";
  write_text_file(dir / "S02R01.txt", content);
  try {
    parse_trial(dir / "S02R01.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("7") != std::string::npos);
  }
}

TEST_CASE("parse_trial rejects empty files and wrong field counts") {
  const auto dir = test_dir("daphnet_empty");
  write_text_file(dir / "S01R02.txt", "");
  CHECK_THROWS_AS(parse_trial(dir / "S01R02.txt"), ParseError);
  write_text_file(dir / "S01R03.txt", "1000 1 2 3 1\n");
  CHECK_THROWS_AS(parse_trial(dir / "S01R03.txt"), ParseError);
  write_text_file(dir / "badname.txt", "1000 1 2 3 4 5 6 7 8 9 1\n");
  CHECK_THROWS_AS(parse_trial(dir / "badname.txt"), ParseError);
}

TEST_CASE("subject metadata matches the bundled table") {
  const auto m1 = subject_metadata(1);
  REQUIRE(m1.has_value());
  CHECK(m1->gender == Gender::Male);
  CHECK(m1->age_years == 66);
  CHECK(m1->disease_duration_years == 16);
  CHECK(m1->hoehn_yahr == 3.0);
  CHECK(m1->tested_in == MedicationState::Off);

  CHECK(subject_metadata().size() == 8);
  CHECK(is_study_subject(5));
  CHECK_FALSE(is_study_subject(4));
  CHECK_FALSE(is_study_subject(10));

  // The shipped CSV and the embedded table must agree.
  const auto loaded = load_subject_metadata(std::filesystem::path(FOGRL_SOURCE_DIR) / "data" /
                                            "daphnet_subjects.csv");
  REQUIRE(loaded.size() == subject_metadata().size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].id == subject_metadata()[i].id);
    CHECK(loaded[i].gender == subject_metadata()[i].gender);
    CHECK(loaded[i].age_years == subject_metadata()[i].age_years);
    CHECK(loaded[i].disease_duration_years == subject_metadata()[i].disease_duration_years);
    CHECK(loaded[i].hoehn_yahr == subject_metadata()[i].hoehn_yahr);
    CHECK(loaded[i].tested_in == subject_metadata()[i].tested_in);
  }
}

TEST_CASE("extract_episodes finds maximal freeze runs") {
  const RawTrial t = trial_from_annotations({1, 1, 2, 2, 2, 1, 2, 1});
  const auto eps = extract_episodes(t);
  REQUIRE(eps.size() == 2);
  CHECK(eps[0].onset_ms == 2000);
  CHECK(eps[0].end_ms == 4000);
  CHECK(eps[0].pre_window_start_ms == 0);
  CHECK(eps[1].onset_ms == 6000);
  CHECK(eps[1].end_ms == 6000);
  CHECK(eps[1].pre_window_start_ms == 5000);
}

TEST_CASE("extract_episodes edge shapes") {
  CHECK(extract_episodes(trial_from_annotations({1, 1, 1, 1})).empty());

  // An out-of-experiment gap splits a would-be run.
  const auto split = extract_episodes(trial_from_annotations({2, 2, 0, 2}));
  REQUIRE(split.size() == 2);
  CHECK(split[0].onset_ms == 0);
  CHECK(split[0].end_ms == 1000);
  CHECK(split[1].onset_ms == 3000);

  // Freeze at trial start and end.
  const auto edges = extract_episodes(trial_from_annotations({2, 1, 2}));
  REQUIRE(edges.size() == 2);

  // Annotation-0 history bounds the pre-window.
  const auto gap = extract_episodes(trial_from_annotations({1, 0, 1, 1, 2}));
  REQUIRE(gap.size() == 1);
  CHECK(gap[0].pre_window_start_ms == 2000);
}

TEST_CASE("extract_episodes is idempotent and split-invariant") {
  Rng rng(7);
  std::vector<int> anns;
  for (int i = 0; i < 400; ++i) anns.push_back(static_cast<int>(rng.uniform_index(3)));
  const RawTrial t = trial_from_annotations(anns);
  const auto once = extract_episodes(t);
  const auto twice = extract_episodes(t);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].onset_ms == twice[i].onset_ms);
    CHECK(once[i].end_ms == twice[i].end_ms);
  }

  // Splitting the trial at a non-freeze boundary changes nothing.
  std::size_t cut = 200;
  while (anns[cut] == 2 || anns[cut - 1] == 2) ++cut;
  RawTrial a = t, b = t;
  a.samples.resize(cut);
  b.samples.erase(b.samples.begin(), b.samples.begin() + static_cast<long>(cut));
  auto joined = extract_episodes(a);
  for (const auto& e : extract_episodes(b)) joined.push_back(e);
  REQUIRE(joined.size() == once.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(joined[i].onset_ms == once[i].onset_ms);
    CHECK(joined[i].end_ms == once[i].end_ms);
  }
}

TEST_CASE("fog_density is episodes per in-experiment minute") {
  // 600 in-experiment samples at 1 Hz = 10 minutes, six isolated freezes.
  std::vector<int> anns(600, 1);
  for (int k = 0; k < 6; ++k) anns[static_cast<std::size_t>(40 + 90 * k)] = 2;
  const RawTrial t = trial_from_annotations(anns);
  CHECK(fog_density({t}) == doctest::Approx(0.6).epsilon(1e-12));

  CHECK(fog_density({trial_from_annotations(std::vector<int>(60, 1))}) == 0.0);

  // Out-of-experiment samples do not count toward the denominator.
  std::vector<int> padded = anns;
  padded.insert(padded.end(), 600, 0);
  CHECK(fog_density({trial_from_annotations(padded)}) == doctest::Approx(0.6).epsilon(1e-12));

  CHECK_THROWS_AS(fog_density({trial_from_annotations(std::vector<int>(10, 0))}),
                  DegenerateInputError);
}

TEST_CASE("canonical trial files round-trip bit-exactly") {
  Rng rng(11);
  RawTrial t;
  t.subject_id = 3;
  t.run_id = 2;
  for (int i = 0; i < 200; ++i) {
    Sample s;
    s.t_ms = i * 15 + static_cast<std::int64_t>(rng.uniform_index(10));
    for (auto& c : s.channels) {
      // Mix of integral values (the raw format) and awkward decimals.
      c = rng.bernoulli(0.5) ? std::floor(rng.uniform(-1000, 1000))
                             : rng.uniform(-1.0, 1.0) * 1e-3;
    }
    s.annotation = static_cast<int>(rng.uniform_index(3));
    t.samples.push_back(s);
  }
  for (std::size_t i = 1; i < t.samples.size(); ++i)
    t.samples[i].t_ms = std::max(t.samples[i].t_ms, t.samples[i - 1].t_ms + 1);

  const auto dir = test_dir("daphnet_roundtrip");
  const std::string csv = write_trial_csv(t);
  write_text_file(dir / "S03R02.csv", csv);
  const RawTrial back = parse_trial_csv(dir / "S03R02.csv");
  REQUIRE(back.samples.size() == t.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    CHECK(back.samples[i].t_ms == t.samples[i].t_ms);
    CHECK(back.samples[i].annotation == t.samples[i].annotation);
    for (int c = 0; c < 9; ++c)
      CHECK(back.samples[i].channels[static_cast<std::size_t>(c)] ==
            t.samples[i].channels[static_cast<std::size_t>(c)]);
  }
  // And the re-serialization is byte-identical.
  CHECK(write_trial_csv(back) == csv);
}

TEST_CASE("load_corpus restricts to study subjects") {
  const auto dir = test_dir("daphnet_corpus");
  const std::string line = "1000 1 2 3 4 5 6 7 8 9 1\n";
  write_text_file(dir / "S01R01.txt", line);
  write_text_file(dir / "S04R01.txt", line);  // not a study subject
  write_text_file(dir / "S09R02.txt", line);
  write_text_file(dir / "notes.md", "not a recording\n");
  const auto trials = load_corpus(dir);
  REQUIRE(trials.size() == 2);
  CHECK(trials[0].subject_id == 1);
  CHECK(trials[1].subject_id == 9);
}
