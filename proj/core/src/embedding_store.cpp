#include "protoverb/embedding_store.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "protoverb/errors.hpp"

namespace protoverb {

using nlohmann::json;

namespace {

bool has_gzip_suffix(const std::filesystem::path& path) { return path.extension() == ".gz"; }

// Returns an error message, or empty when the header is valid.
std::string parse_header(const json& j, DatasetHeader& out) {
  if (!j.is_object()) return "header must be a JSON object";
  const auto version = j.find("format_version");
  if (version == j.end() || !version->is_number_integer()) return "header: missing integer 'format_version'";
  if (version->get<long long>() != kDatasetFormatVersion) {
    return "header: unsupported format_version " + version->dump() + " (expected 1)";
  }
  const auto dim = j.find("dim");
  if (dim == j.end() || !dim->is_number_integer() || dim->get<long long>() < 1) {
    return "header: 'dim' must be an integer >= 1";
  }
  const auto names = j.find("class_names");
  if (names == j.end() || !names->is_array() || names->empty()) {
    return "header: 'class_names' must be a non-empty array";
  }
  std::set<std::string> seen;
  for (const auto& name : *names) {
    if (!name.is_string()) return "header: class names must be strings";
    if (!seen.insert(name.get<std::string>()).second) {
      return "header: duplicate class name '" + name.get<std::string>() + "'";
    }
  }
  const auto template_id = j.find("template_id");
  if (template_id == j.end() || !template_id->is_string()) return "header: missing string 'template_id'";
  const auto model_id = j.find("model_id");
  if (model_id == j.end() || !model_id->is_string()) return "header: missing string 'model_id'";

  out.format_version = kDatasetFormatVersion;
  out.dim = dim->get<std::size_t>();
  out.class_names = names->get<std::vector<std::string>>();
  out.template_id = template_id->get<std::string>();
  out.model_id = model_id->get<std::string>();
  return {};
}

std::string parse_record(const json& j, const DatasetHeader& header, EmbeddingRecord& out) {
  if (!j.is_object()) return "record must be a JSON object";

  const auto split = j.find("split");
  if (split == j.end() || !split->is_string()) return "missing string 'split'";
  const auto parsed_split = parse_split(split->get<std::string>());
  if (!parsed_split) return "unknown split '" + split->get<std::string>() + "'";
  out.split = *parsed_split;

  const auto label = j.find("label");
  const bool labelled = out.split != Split::kVocabProbe;
  if (labelled) {
    if (label == j.end() || label->is_null()) return "missing 'label' on a " + std::string(to_string(out.split)) + " record";
    if (!label->is_number_integer()) return "'label' must be an integer";
    const auto value = label->get<long long>();
    if (value < 0 || static_cast<std::size_t>(value) >= header.num_classes()) {
      return "label " + std::to_string(value) + " out of range [0, " + std::to_string(header.num_classes()) + ")";
    }
    out.label = static_cast<std::size_t>(value);
  } else if (label != j.end() && !label->is_null()) {
    return "vocab_probe records must not carry a label";
  }

  const auto embedding = j.find("embedding");
  if (embedding == j.end() || !embedding->is_array()) return "missing array 'embedding'";
  if (embedding->size() != header.dim) {
    return "dimension mismatch: embedding has " + std::to_string(embedding->size()) + " entries, header dim is " +
           std::to_string(header.dim);
  }
  out.embedding.clear();
  out.embedding.reserve(header.dim);
  for (const auto& value : *embedding) {
    if (!value.is_number()) return "embedding entries must be numbers";
    const double x = value.get<double>();
    if (!std::isfinite(x)) return "embedding contains a non-finite entry";
    out.embedding.push_back(x);
  }

  const auto token = j.find("token");
  if (token != j.end() && !token->is_null()) {
    if (out.split != Split::kVocabProbe) return "'token' is only allowed on vocab_probe records";
    if (!token->is_string()) return "'token' must be a string";
    out.token = token->get<std::string>();
  }

  const auto logprobs = j.find("label_word_logprobs");
  if (logprobs != j.end() && !logprobs->is_null()) {
    if (!logprobs->is_array() || logprobs->size() != header.num_classes()) {
      return "'label_word_logprobs' must hold exactly " + std::to_string(header.num_classes()) + " lists";
    }
    std::vector<std::vector<double>> lists;
    lists.reserve(logprobs->size());
    for (const auto& words : *logprobs) {
      if (!words.is_array() || words.empty()) return "each 'label_word_logprobs' entry must be a non-empty array";
      auto& list = lists.emplace_back();
      for (const auto& value : words) {
        if (!value.is_number()) return "label-word log-probs must be numbers";
        const double x = value.get<double>();
        if (!std::isfinite(x) || x > 0.0) return "label-word log-probs must be finite and <= 0";
        list.push_back(x);
      }
    }
    out.label_word_logprobs = std::move(lists);
  }
  return {};
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kVocabProbe: return "vocab_probe";
  }
  return "unknown";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  if (text == "vocab_probe") return Split::kVocabProbe;
  return std::nullopt;
}

std::vector<std::size_t> EmbeddingDataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<std::vector<std::size_t>> EmbeddingDataset::indices_by_class(Split split) const {
  std::vector<std::vector<std::size_t>> out(num_classes());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].split == split && records[i].label) out[*records[i].label].push_back(i);
  }
  return out;
}

std::vector<std::size_t> EmbeddingDataset::class_counts(Split split) const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (const auto& record : records) {
    if (record.split == split && record.label) ++counts[*record.label];
  }
  return counts;
}

std::string format_diagnostic(const Diagnostic& d) {
  std::string out;
  if (d.line > 0) out += "line " + std::to_string(d.line) + ": ";
  if (!d.record_id.empty()) out += "record '" + d.record_id + "': ";
  return out + d.message;
}

ParseOutcome parse_dataset(std::string_view text) {
  ParseOutcome outcome;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  bool header_failed = false;
  EmbeddingDataset dataset;
  std::unordered_set<std::string> ids;

  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      outcome.diagnostics.push_back({line_no, {}, "malformed JSON (truncated or invalid line)"});
      if (!have_header && !header_failed) header_failed = true;
      continue;
    }

    if (!have_header && !header_failed) {
      if (auto error = parse_header(j, dataset.header); !error.empty()) {
        outcome.diagnostics.push_back({line_no, {}, error});
        header_failed = true;
      } else {
        have_header = true;
      }
      continue;
    }
    if (header_failed) continue;

    std::string id;
    if (const auto it = j.find("id"); j.is_object() && it != j.end() && it->is_string()) id = it->get<std::string>();
    if (id.empty()) {
      outcome.diagnostics.push_back({line_no, {}, "missing non-empty string 'id'"});
      continue;
    }
    EmbeddingRecord record;
    record.id = id;
    if (auto error = parse_record(j, dataset.header, record); !error.empty()) {
      outcome.diagnostics.push_back({line_no, id, error});
      continue;
    }
    if (!ids.insert(id).second) {
      outcome.diagnostics.push_back({line_no, id, "duplicate id"});
      continue;
    }
    dataset.records.push_back(std::move(record));
  }

  if (!have_header && !header_failed) {
    outcome.diagnostics.push_back({0, {}, "empty file: missing header line"});
  }
  if (have_header) outcome.dataset = std::move(dataset);
  return outcome;
}

std::string read_text_file(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("cannot open '" + path.string() + "': no such file");
  if (has_gzip_suffix(path)) {
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) throw IoError("cannot open '" + path.string() + "'");
    std::string out;
    char buffer[1 << 16];
    int n = 0;
    while ((n = gzread(file, buffer, sizeof(buffer))) > 0) out.append(buffer, static_cast<std::size_t>(n));
    const bool failed = n < 0;
    gzclose(file);
    if (failed) throw IoError("gzip read error in '" + path.string() + "'");
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (has_gzip_suffix(path)) {
    // Fixed header fields (no mtime/name) keep compressed output reproducible.
    gzFile file = gzopen(path.string().c_str(), "wb9");
    if (file == nullptr) throw IoError("cannot write '" + path.string() + "'");
    const int written = bytes.empty() ? 0 : gzwrite(file, bytes.data(), static_cast<unsigned>(bytes.size()));
    const int closed = gzclose(file);
    if ((!bytes.empty() && written <= 0) || closed != Z_OK) throw IoError("gzip write error in '" + path.string() + "'");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write error in '" + path.string() + "'");
}

EmbeddingDataset load_dataset(const std::filesystem::path& path) {
  auto outcome = parse_dataset(read_text_file(path));
  if (!outcome.diagnostics.empty()) {
    const auto& d = outcome.diagnostics.front();
    throw DataError(d.message, d.line > 0 ? std::optional<std::size_t>(d.line) : std::nullopt,
                    d.record_id.empty() ? std::nullopt : std::optional<std::string>(d.record_id));
  }
  return std::move(*outcome.dataset);
}

ParseOutcome validate_dataset_file(const std::filesystem::path& path) { return parse_dataset(read_text_file(path)); }

json header_to_json(const DatasetHeader& header) {
  return json{{"format_version", header.format_version},
              {"dim", header.dim},
              {"class_names", header.class_names},
              {"template_id", header.template_id},
              {"model_id", header.model_id}};
}

json record_to_json(const EmbeddingRecord& record) {
  json j{{"id", record.id}, {"split", to_string(record.split)}, {"embedding", record.embedding}};
  if (record.label) j["label"] = *record.label;
  if (record.token) j["token"] = *record.token;
  if (record.label_word_logprobs) j["label_word_logprobs"] = *record.label_word_logprobs;
  return j;
}

std::string serialize_dataset(const EmbeddingDataset& dataset) {
  std::string out = header_to_json(dataset.header).dump();
  out += '\n';
  for (const auto& record : dataset.records) {
    out += record_to_json(record).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, serialize_dataset(dataset));
}

}  // namespace protoverb
