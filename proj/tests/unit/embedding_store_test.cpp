#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "protoverb/embedding_store.hpp"
#include "protoverb/errors.hpp"
#include "protoverb/synthetic.hpp"
#include "test_util.hpp"

namespace protoverb {
namespace {

const char* kHeader = R"({"format_version":1,"dim":4,"class_names":["A","B"],"template_id":"t1","model_id":"m"})";

std::string with_records(std::initializer_list<const char*> records) {
  std::string text = std::string(kHeader) + "\n";
  for (const char* r : records) text += std::string(r) + "\n";
  return text;
}

bool mentions(const ParseOutcome& o, std::size_t line, const std::string& needle) {
  for (const auto& d : o.diagnostics) {
    if (d.line == line && format_diagnostic(d).find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(ParseDataset, MinimalValidFile) {
  const auto o = parse_dataset(with_records({
      R"({"id":"a","split":"train","label":0,"embedding":[1,2,3,4]})",
      R"({"id":"b","split":"test","label":1,"embedding":[0.5,0,0,-1]})",
  }));
  ASSERT_TRUE(o.ok());
  EXPECT_EQ(o.dataset->records.size(), 2u);
  EXPECT_EQ(o.dataset->header.class_names, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(o.dataset->records[1].id, "b");
}

TEST(ParseDataset, DimensionMismatchNamesRecord) {
  const auto o = parse_dataset(with_records({R"({"id":"short","split":"train","label":0,"embedding":[1,2,3]})"}));
  ASSERT_EQ(o.diagnostics.size(), 1u);
  EXPECT_EQ(o.diagnostics[0].record_id, "short");
  EXPECT_EQ(o.diagnostics[0].line, 2u);
}

TEST(ParseDataset, CollectsEveryViolationWithLineNumbers) {
  const auto o = parse_dataset(with_records({
      R"({"id":"a","split":"train","label":0,"embedding":[1,2,3,4]})",
      R"({"id":"a","split":"train","label":0,"embedding":[1,2,3,4]})",
      R"({"id":"c","split":"train","label":2,"embedding":[1,2,3,4]})",
      R"({"id":"d","split":"vocab_probe","label":0,"embedding":[1,2,3,4]})",
      R"({"id":"e","split":"dev","label":0,"embedding":[1,2,3,4]})",
      R"({"id":"f","split":"train","label":0,"embedding":[1,2,3,4],"label_word_logprobs":[[-1],[0.5]]})",
      R"({"id":"g","split":"train","label":0,"embedding":[1,2,3,4],"token":"x"})",
      R"({"id":"h","split":"train","label":0,"embedding":[1,2,3,4],"label_word_logprobs":[[-1]]})",
      R"({"id":"i","split":"train","label":0,"embedding":[1,2,3,4],"label_word_logprobs":[[-1],[]]})",
      R"({"id":"j","split":"train","label":1,"embedding":[1,2,3,4)",
  }));
  EXPECT_EQ(o.diagnostics.size(), 9u);
  EXPECT_TRUE(mentions(o, 3, "duplicate"));
  for (std::size_t line = 4; line <= 11; ++line) EXPECT_FALSE(o.ok()) << line;
  EXPECT_TRUE(mentions(o, 11, "line 11"));
  ASSERT_TRUE(o.dataset.has_value());
  EXPECT_EQ(o.dataset->records.size(), 1u);  // only the first "a" survives
}

TEST(ParseDataset, HeaderErrors) {
  EXPECT_FALSE(parse_dataset("").ok());
  EXPECT_FALSE(parse_dataset(R"({"format_version":2,"dim":4,"class_names":["A"],"template_id":"t","model_id":"m"})").ok());
  EXPECT_FALSE(parse_dataset(R"({"format_version":1,"dim":0,"class_names":["A"],"template_id":"t","model_id":"m"})").ok());
  EXPECT_FALSE(parse_dataset(R"({"format_version":1,"dim":2,"class_names":["A","A"],"template_id":"t","model_id":"m"})").ok());
  EXPECT_FALSE(parse_dataset(R"({"format_version":1,"dim":2,"class_names":[],"template_id":"t","model_id":"m"})").ok());
}

TEST(ParseDataset, NonFiniteOrNonNumericEmbeddingRejected) {
  const auto o = parse_dataset(with_records({R"({"id":"a","split":"train","label":0,"embedding":[1,"x",3,4]})"}));
  EXPECT_EQ(o.diagnostics.size(), 1u);
}

TEST(LoadDataset, TruncatedFinalLineThrowsWithLine) {
  const auto dir = testing::scratch_dir("truncated");
  const auto path = dir / "d.ndjson";
  write_text_file(path, with_records({R"({"id":"a","split":"train","label":0,"embedding":[1,2,3,4]})", R"({"id":"b","spl)"}));
  try {
    load_dataset(path);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadDataset, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset("/nonexistent/protoverb/x.ndjson"), IoError);
  EXPECT_THROW(validate_dataset_file("/nonexistent/protoverb/x.ndjson"), IoError);
}

TEST(LoadDataset, FixtureClassCountsAgreeWithIndependentCount) {
  const auto path = testing::data_file("fixture_40.ndjson");
  const auto ds = load_dataset(path);
  EXPECT_EQ(ds.records.size(), 40u);
  EXPECT_EQ(ds.class_counts(Split::kTrain), (std::vector<std::size_t>{10, 10, 10, 10}));

  // Independent count straight from the raw lines.
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::map<int, int> counts;
  while (std::getline(in, line)) {
    if (!line.empty()) ++counts[nlohmann::json::parse(line).at("label").get<int>()];
  }
  EXPECT_EQ(counts, (std::map<int, int>{{0, 10}, {1, 10}, {2, 10}, {3, 10}}));
}

TEST(Serialize, RoundTripIsExact) {
  SyntheticSpec spec;
  spec.manual_noise = 0.2;
  spec.probe_words_per_class = 1;
  spec.filler_tokens = 2;
  const auto ds = make_synthetic_dataset(spec);
  const auto text = serialize_dataset(ds);
  const auto back = parse_dataset(text);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back.dataset, ds);
  EXPECT_EQ(serialize_dataset(*back.dataset), text);
}

TEST(Serialize, FloatValuesRoundTrip) {
  EmbeddingDataset ds;
  ds.header = {1, 3, {"A"}, "t", "m"};
  ds.records.push_back({"r", Split::kTrain, 0, {0.1f, 1e-30f, -3.4028235e38f}, std::nullopt, std::nullopt});
  const auto back = parse_dataset(serialize_dataset(ds));
  ASSERT_TRUE(back.ok());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(static_cast<float>(back.dataset->records[0].embedding[i]), static_cast<float>(ds.records[0].embedding[i]));
    EXPECT_EQ(back.dataset->records[0].embedding[i], ds.records[0].embedding[i]);
  }
}

TEST(Serialize, GzipFileRoundTrip) {
  const auto dir = testing::scratch_dir("gzip");
  const auto ds = make_synthetic_dataset({});
  write_dataset(ds, dir / "d.ndjson.gz");
  std::ifstream raw(dir / "d.ndjson.gz", std::ios::binary);
  unsigned char magic[2] = {0, 0};
  raw.read(reinterpret_cast<char*>(magic), 2);
  EXPECT_EQ(magic[0], 0x1f);
  EXPECT_EQ(magic[1], 0x8b);
  EXPECT_EQ(load_dataset(dir / "d.ndjson.gz"), ds);
}

TEST(Indices, SplitsAndClassesInFileOrder) {
  const auto o = parse_dataset(with_records({
      R"({"id":"a","split":"train","label":1,"embedding":[1,2,3,4]})",
      R"({"id":"b","split":"test","label":0,"embedding":[1,2,3,4]})",
      R"({"id":"c","split":"train","label":1,"embedding":[1,2,3,4]})",
      R"({"id":"v","split":"vocab_probe","token":"w","embedding":[1,2,3,4]})",
  }));
  ASSERT_TRUE(o.ok());
  EXPECT_EQ(o.dataset->indices(Split::kTrain), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(o.dataset->indices_by_class(Split::kTrain)[1], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(o.dataset->class_counts(Split::kTest), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(o.dataset->records[3].token, "w");
}

}  // namespace
}  // namespace protoverb
