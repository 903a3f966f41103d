#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "longguide/longguide.hpp"
#include "support/fixture.hpp"
#include "support/fn_backend.hpp"

using namespace longguide;
using nlohmann::json;
using testing_support::FnBackend;

namespace {

std::string jsonl(int n) {
  std::string out;
  for (int i = 0; i < n; ++i)
    out += json{{"input", "in " + std::to_string(i)}, {"output", "out " + std::to_string(i)}}.dump() + "\n";
  return out;
}

std::string dataset_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_dataset(in, "d");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

const TaskSpec kTask{"dialogue summarization", "Summarize the following dialogue.", "", "summary"};

std::string ratings(int f, int c, int fa, int s, int q) {
  return "[The Start of Explanation]\nfine\n[The End of Explanation]\n[The Start of Ratings]\n{\n\"Format\": " +
         std::to_string(f) + ",\n\"Content\": " + std::to_string(c) + ",\n\"Factuality\": " + std::to_string(fa) +
         ",\n\"Style\": " + std::to_string(s) + ",\n\"Quality\": " + std::to_string(q) + ",\n}\n[The End of Ratings]";
}

}  // namespace

TEST(Dataset, ErrorsNameTheLine) {
  EXPECT_EQ(dataset_error("{\"input\": \"a\"}\n"), "line 1: missing field output");
  EXPECT_EQ(dataset_error(jsonl(2) + "{oops\n"), "line 3: malformed JSON");
  EXPECT_EQ(dataset_error("{\"input\": \"a\", \"output\": \"  \"}\n"), "line 1: empty output");
  EXPECT_EQ(dataset_error("\n" + jsonl(1) + "\n"), "");
}

TEST(Dataset, TruncatesToCap) {
  std::istringstream in(jsonl(60));
  auto d = parse_dataset(in, "train", kMaxTrainSamples);
  EXPECT_EQ(d.size(), 50u);
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_NE(d.warnings[0].find("60"), std::string::npos);
  EXPECT_EQ(d.samples.back().input, "in 49");
}

TEST(Dataset, SamplingWithoutReplacement) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    auto idx = sample_without_replacement(rng, 10, 4);
    std::set<std::size_t> u(idx.begin(), idx.end());
    EXPECT_EQ(u.size(), 4u);
    for (auto i : idx) EXPECT_LT(i, 10u);
  }
  EXPECT_EQ(sample_without_replacement(rng, 3, 9).size(), 3u);
}

TEST(Config, FixtureLoads) {
  auto cfg = fixture::config();
  EXPECT_EQ(cfg.task.name, "dialogue summarization");
  EXPECT_EQ(cfg.task.response_noun, "summary");
  EXPECT_EQ(cfg.learn.selection.iterations, 5);
  EXPECT_EQ(cfg.learn.selection.seed, 7u);
  ASSERT_TRUE(cfg.judge.has_value());
  EXPECT_EQ(cfg.judge->api_key_env, "LONGGUIDE_JUDGE_API_KEY");
  EXPECT_EQ(cfg.backend.self_consistency, 3);
  EXPECT_TRUE(std::filesystem::exists(cfg.resolve(cfg.train_path)));
}

TEST(Config, Rejections) {
  const json base = {{"task", {{"name", "t"}, {"instruction", "i"}}}};
  EXPECT_NO_THROW(parse_config(base, "."));
  EXPECT_THROW(parse_config(json::object(), "."), ConfigError);
  auto bad_kind = base;
  bad_kind["backend"] = {{"kind", "grpc"}};
  EXPECT_THROW(parse_config(bad_kind, "."), ConfigError);
  auto bad_variants = base;
  bad_variants["learn"] = {{"variants", "some"}};
  EXPECT_THROW(parse_config(bad_variants, "."), ConfigError);
  auto extra = base;
  extra["catalog"] = {{"extra_metrics", {"Politeness"}}};
  EXPECT_EQ(parse_config(extra, ".").catalog().size(), 28u);
  BackendSettings even;
  even.self_consistency = 2;
  EXPECT_THROW(call_settings(even), ConfigError);
}

TEST(Infer, UsesBundleVariantAndOverride) {
  GuidelineBundle b;
  b.ocg = OutputConstraintGuideline{"OCG TEXT", {}};
  b.selected = VariantTag::Ocg;
  TaskDataset d;
  d.samples = {{"q1", "r1"}, {"q2", "r2"}};
  std::vector<std::string> prompts;
  FnBackend be([&](const std::string& p) {
    prompts.push_back(p);
    return std::string("out");
  });
  Generator g(be);
  auto res = infer(kTask, b, d, g);
  EXPECT_EQ(res.variant, VariantTag::Ocg);
  ASSERT_EQ(res.records.size(), 2u);
  EXPECT_EQ(res.records[1].reference, "r2");
  EXPECT_EQ(prompts[0], "Summarize the following dialogue.\nq1\nOCG TEXT");

  InferOptions none;
  none.variant = VariantTag::None;
  prompts.clear();
  infer(kTask, b, d, g, none);
  EXPECT_EQ(prompts[0], "Summarize the following dialogue.\nq1");

  InferOptions mg;
  mg.variant = VariantTag::Mg;
  EXPECT_THROW(infer(kTask, b, d, g, mg), DataError);
}

TEST(Infer, FewShotDrawIsSeeded) {
  GuidelineBundle b;
  TaskDataset d;
  d.samples = {{"q", "r"}};
  FnBackend be([](const std::string&) { return std::string("o"); });
  Generator g(be);
  InferOptions o;
  for (int i = 0; i < 6; ++i) o.demo_pool.push_back({"d" + std::to_string(i), "o" + std::to_string(i)});
  o.shots = 3;
  o.seed = 42;
  auto a = infer(kTask, b, d, g, o);
  auto c = infer(kTask, b, d, g, o);
  EXPECT_EQ(a.demo_indices, c.demo_indices);
  EXPECT_EQ(a.demo_indices.size(), 3u);
  o.shots = 7;
  EXPECT_THROW(infer(kTask, b, d, g, o), DataError);
}

TEST(Infer, PerSampleFailuresBecomeEmptyOutputs) {
  GuidelineBundle b;
  TaskDataset d;
  d.samples = {{"ok", "r"}, {"bad", "r"}};
  FnBackend be([](const std::string& p) -> std::string {
    if (p.find("bad") != std::string::npos) throw TransportError("timeout");
    return "fine";
  });
  Generator g(be);
  auto res = infer(kTask, b, d, g);
  EXPECT_EQ(res.records[0].output, "fine");
  EXPECT_EQ(res.records[1].output, "");
  EXPECT_EQ(res.warnings.size(), 1u);
}

TEST(Outputs, RoundTripFile) {
  const auto p = std::filesystem::temp_directory_path() / "longguide_outputs_test.jsonl";
  std::vector<OutputRecord> recs{{"in\nline", "ref \"q\"", "out"}};
  write_outputs(recs, p);
  auto back = read_outputs(p);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].input, "in\nline");
  EXPECT_EQ(back[0].reference, "ref \"q\"");
  std::ofstream(p, std::ios::trunc).close();
  EXPECT_THROW(read_outputs(p), DataError);
  std::filesystem::remove(p);
}

TEST(Evaluate, ThreeRunConfidenceInterval) {
  // Per-run ROUGE-L recall on a single 4-token reference: 1/4, 2/4, 4/4.
  auto run = [](const std::string& label, const std::string& out) {
    return NamedRun{label, {{"q", "a b c d", out}}};
  };
  auto rep = evaluate({run("r1", "a"), run("r2", "a b"), run("r3", "a b c d")});
  const double m = (0.25 + 0.5 + 1.0) / 3.0;
  const double sd = std::sqrt(((0.25 - m) * (0.25 - m) + (0.5 - m) * (0.5 - m) + (1.0 - m) * (1.0 - m)) / 2.0);
  const double t = 4.302652729911275;
  EXPECT_NEAR(rep.rouge_l.mean, m, 1e-12);
  ASSERT_TRUE(rep.rouge_l.half_width);
  EXPECT_NEAR(*rep.rouge_l.half_width, t * sd / std::sqrt(3.0), 1e-6);
  const auto csv = report_csv(rep);
  EXPECT_NE(csv.find("all,ci95,"), std::string::npos);
  EXPECT_NE(csv.find("r2,mean,0.500000,"), std::string::npos);
  EXPECT_NE(report_markdown(rep).find("+/- "), std::string::npos);
}

TEST(Evaluate, SingleRunHasNoInterval) {
  auto rep = evaluate({NamedRun{"only", {{"q", "a b", "a b"}}}});
  EXPECT_FALSE(rep.rouge_l.half_width);
  EXPECT_EQ(report_csv(rep).find("ci95"), std::string::npos);
  EXPECT_THROW(evaluate({NamedRun{"none", {}}}), DataError);
}

TEST(Evaluate, WithJudge) {
  JudgeFn judge = [](const OutputRecord& r) {
    return parse_judge_ratings(r.output == r.reference ? ratings(10, 10, 10, 10, 10) : ratings(2, 4, 6, 8, 10));
  };
  auto rep = evaluate({NamedRun{"r", {{"q", "x", "x"}, {"q", "x", "y"}}}}, judge);
  ASSERT_TRUE(rep.judge);
  EXPECT_DOUBLE_EQ((*rep.judge)[0].mean, 6.0);
  EXPECT_DOUBLE_EQ((*rep.judge)[4].mean, 10.0);
  EXPECT_NE(report_csv(rep).find("judge_format"), std::string::npos);
}

TEST(Judge, ParsesClampsAndRejects) {
  auto r = parse_judge_ratings(ratings(9, 8, 10, 9, 9));
  EXPECT_EQ(r.values(), (std::array<int, 5>{9, 8, 10, 9, 9}));
  EXPECT_EQ(r.explanation, "fine");
  std::vector<std::string> warnings;
  auto c = parse_judge_ratings(ratings(12, 0, 5, 5, 5), &warnings);
  EXPECT_EQ(c.format, 10);
  EXPECT_EQ(c.content, 1);
  EXPECT_EQ(warnings.size(), 2u);
  EXPECT_THROW(parse_judge_ratings("\"Format\": 9"), ParseError);
  EXPECT_THROW(parse_judge_ratings("[The Start of Ratings]{\"Format\": 9}[The End of Ratings]"), ParseError);
}

TEST(Judge, RetriesOnce) {
  MockBackend mock(MockScript::from_json(json::array({"garbage", ratings(7, 7, 7, 7, 7)})));
  Generator g(mock);
  EXPECT_EQ(judge_evaluate("q", "r", "a", g).quality, 7);
  MockBackend bad(MockScript::from_json(json{{"*", "garbage"}}));
  Generator g2(bad);
  EXPECT_THROW(judge_evaluate("q", "r", "a", g2), ParseError);
  EXPECT_EQ(bad.call_count(), 2u);
}

TEST(AnalyzeJs, DisjointScoresGiveOne) {
  GuidelineBundle b;
  b.task_name = "t";
  b.metrics = {{"Clarity"}, {"Brevity"}};
  FnBackend judge([](const std::string& p) {
    return p.find("Output: GENERATED") != std::string::npos ? std::string(R"({"Clarity": 1, "Brevity": 2})")
                                                             : std::string(R"({"Clarity": 5, "Brevity": 4})");
  });
  Generator g(judge);
  auto rep = analyze_js({NamedRun{"g", {{"q", "ref text", "GENERATED"}, {"q2", "ref two", "GENERATED"}}}}, b, g);
  ASSERT_EQ(rep.groups.size(), 1u);
  EXPECT_DOUBLE_EQ(rep.groups[0].avg_js, 1.0);
  EXPECT_FALSE(rep.pearson_rouge_l);
}

TEST(AnalyzeJs, IdenticalScoresGiveZeroAndCorrelate) {
  GuidelineBundle b;
  b.task_name = "t";
  b.metrics = {{"Clarity"}};
  // Score = number of words in the judged output, capped at 5.
  FnBackend judge([](const std::string& p) {
    const auto at = p.find("\nOutput: ") + 9;
    const auto text = p.substr(at, p.find('\n', at) - at);
    const auto n = std::min<std::size_t>(5, tokenize(text).size());
    return "{\"Clarity\": " + std::to_string(n) + "}";
  });
  Generator g(judge);
  NamedRun echo{"echo", {{"q", "a b c", "a b c"}, {"q", "a b", "a b"}}};
  NamedRun shorter{"short", {{"q", "a b c", "a"}, {"q", "a b", "a b"}}};
  NamedRun shortest{"shortest", {{"q", "a b c", "a"}, {"q", "a b", "a"}}};
  auto rep = analyze_js({echo, shorter, shortest}, b, g);
  EXPECT_EQ(rep.groups[0].avg_js, 0.0);
  EXPECT_GT(rep.groups[1].avg_js, 0.0);
  ASSERT_TRUE(rep.pearson_rouge_l);
  EXPECT_LT(*rep.pearson_rouge_l, -0.9);
  EXPECT_NE(js_report_csv(rep).find("pearson_avg_js_rouge_l"), std::string::npos);
}

namespace {

ProbeConfig token_probe(int shots) {
  ProbeConfig c;
  c.property = "tokens";
  c.shots = shots;
  c.target_tokens = 17;
  return c;
}

const std::string k17 = "one two three four five six seven eight nine. ten eleven twelve thirteen fourteen fifteen sixteen seventeen.";

}  // namespace

TEST(Probe, ConstantOutputsAttainFully) {
  auto pool = load_demo_pool(fixture::path("probe_pool.jsonl"));
  auto eval = fixture::test();
  FnBackend gen([](const std::string&) { return k17; });
  Generator g(gen);
  auto rep = probe(token_probe(3), pool, eval, kTask, g, nullptr);
  EXPECT_EQ(rep.demo_indices, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_DOUBLE_EQ(rep.attainment_pct, 100.0);
  EXPECT_DOUBLE_EQ(rep.nt_mean, 17.0);
  EXPECT_DOUBLE_EQ(rep.nt_std, 0.0);
  EXPECT_DOUBLE_EQ(rep.ns_mean, 2.0);
}

TEST(Probe, HalfAndHalf) {
  auto pool = load_demo_pool(fixture::path("probe_pool.jsonl"));
  auto eval = fixture::test();
  std::atomic<int> n{0};
  FnBackend gen([&](const std::string&) { return n++ % 2 == 0 ? k17 : std::string("too short."); });
  Generator g(gen);
  auto rep = probe(token_probe(2), pool, eval, kTask, g, nullptr);
  EXPECT_DOUBLE_EQ(rep.attainment_pct, 50.0);
  EXPECT_DOUBLE_EQ(rep.nt_mean, (17.0 + 2.0) / 2.0);
  EXPECT_DOUBLE_EQ(rep.nt_std, 7.5);
}

TEST(Probe, InsufficientDemonstrations) {
  auto pool = load_demo_pool(fixture::path("probe_pool.jsonl"));
  FnBackend gen([](const std::string&) { return k17; });
  Generator g(gen);
  try {
    probe(token_probe(5), pool, fixture::test(), kTask, g, nullptr);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "insufficient demonstrations");
  }
}

TEST(Probe, GuidelineIsAppended) {
  auto pool = load_demo_pool(fixture::path("probe_pool.jsonl"));
  std::string last;
  FnBackend gen([&](const std::string& p) {
    last = p;
    return k17;
  });
  Generator g(gen);
  auto cfg = token_probe(1);
  cfg.with_guideline = true;
  probe(cfg, pool, fixture::test(), kTask, g, nullptr);
  EXPECT_TRUE(last.ends_with("\nThe output must maintain 17 tokens."));
}

TEST(Probe, MetricPropertyUsesJudge) {
  std::vector<DemoCandidate> pool{{{"a", "x"}, {{"Clarity", 5}}}, {{"b", "y"}, {}}};
  TaskDataset eval;
  eval.samples = {{"q1", "r"}, {"q2", "r"}};
  FnBackend gen([](const std::string&) { return std::string("good"); });
  FnBackend judge([](const std::string& p) {
    return p.find("Output: good") != std::string::npos || p.find("Output: y") != std::string::npos
               ? std::string(R"({"Clarity": 5})")
               : std::string(R"({"Clarity": 2})");
  });
  Generator g(gen);
  Generator j(judge);
  ProbeConfig cfg;
  cfg.property = "Clarity";
  cfg.shots = 2;
  auto rep = probe(cfg, pool, eval, kTask, g, &j);
  EXPECT_EQ(rep.demo_indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(rep.attainment_pct, 100.0);
  EXPECT_THROW(probe(cfg, pool, eval, kTask, g, nullptr), ConfigError);
}
