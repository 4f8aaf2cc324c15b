#pragma once

// Exported [MASK] embedding datasets.
//
// On disk a dataset is newline-delimited JSON. The first line is the header
//
//   {"format_version":1,"dim":D,"class_names":[...],"template_id":"...","model_id":"..."}
//
// and every following non-empty line is one record
//
//   {"id":"...","split":"train"|"test"|"vocab_probe","label":n,
//    "embedding":[...D numbers...],"token":"...","label_word_logprobs":[[...],...]}
//
// `label` is required for train/test and forbidden for vocab_probe; `token`
// appears only on vocab_probe records; `label_word_logprobs` is optional and
// carries one non-empty list of log-probabilities (all <= 0) per class.
// Files whose name ends in ".gz" are read and written gzip-compressed.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace protoverb {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetHeader {
  int format_version = kDatasetFormatVersion;
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  std::string template_id;
  std::string model_id;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  bool operator==(const DatasetHeader&) const = default;
};

enum class Split { kTrain, kTest, kVocabProbe };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct EmbeddingRecord {
  std::string id;
  Split split = Split::kTrain;
  std::optional<std::size_t> label;
  std::vector<double> embedding;
  std::optional<std::string> token;
  std::optional<std::vector<std::vector<double>>> label_word_logprobs;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct EmbeddingDataset {
  DatasetHeader header;
  std::vector<EmbeddingRecord> records;

  std::size_t num_classes() const noexcept { return header.num_classes(); }
  std::size_t dim() const noexcept { return header.dim; }

  // Indices into `records` for one split, in file order.
  std::vector<std::size_t> indices(Split split) const;
  // Per-class record indices of one split (labelled splits only), file order.
  std::vector<std::vector<std::size_t>> indices_by_class(Split split) const;
  // Per-class record counts of one split.
  std::vector<std::size_t> class_counts(Split split) const;

  bool operator==(const EmbeddingDataset&) const = default;
};

struct Diagnostic {
  std::size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string record_id;
  std::string message;
};

std::string format_diagnostic(const Diagnostic& diagnostic);

struct ParseOutcome {
  std::optional<EmbeddingDataset> dataset;  // set when the header was usable
  std::vector<Diagnostic> diagnostics;

  bool ok() const noexcept { return dataset.has_value() && diagnostics.empty(); }
};

// Parses NDJSON text, collecting every violation rather than stopping at the
// first. Records that fail validation are dropped from the returned dataset.
ParseOutcome parse_dataset(std::string_view text);

// Reads the raw (decompressed) bytes of a file. Throws IoError.
std::string read_text_file(const std::filesystem::path& path);
// Writes bytes, gzip-compressing when the path ends in ".gz". Throws IoError.
void write_text_file(const std::filesystem::path& path, std::string_view bytes);

// Loads and fully validates a dataset. Throws IoError when the file cannot
// be read and DataError (carrying the line number) on the first violation.
EmbeddingDataset load_dataset(const std::filesystem::path& path);

// Full validation pass for reporting; never throws on format problems.
ParseOutcome validate_dataset_file(const std::filesystem::path& path);

// Serializes to the NDJSON format above. Numbers use shortest round-trip
// formatting, so parse_dataset(serialize_dataset(d)) == d.
std::string serialize_dataset(const EmbeddingDataset& dataset);
void write_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& path);

nlohmann::json header_to_json(const DatasetHeader& header);
nlohmann::json record_to_json(const EmbeddingRecord& record);

}  // namespace protoverb
