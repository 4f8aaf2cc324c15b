#include "protoverb/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "protoverb/embedding_store.hpp"
#include "protoverb/errors.hpp"

namespace protoverb {

using nlohmann::json;

namespace {

json row_values(const Matrix& m, Eigen::Index r) {
  json values = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  return values;
}

void read_row(const json& j, Matrix& m, Eigen::Index r, std::size_t line) {
  const auto it = j.find("values");
  if (it == j.end() || !it->is_array() || static_cast<Eigen::Index>(it->size()) != m.cols()) {
    throw DataError("expected " + std::to_string(m.cols()) + " values", line);
  }
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const auto& v = (*it)[static_cast<std::size_t>(c)];
    if (!v.is_number()) throw DataError("non-numeric value", line);
    m(r, c) = v.get<double>();
  }
}

template <typename T>
T require(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing '") + key + "'", line);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("bad type for '") + key + "'", line);
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  const auto& meta = cp.meta;
  const auto& w = cp.result.encoder.weight;
  const auto& c = cp.result.prototypes.prototypes;
  json header{{"kind", "protoverb_checkpoint"},
              {"format_version", kCheckpointFormatVersion},
              {"dim", meta.dim},
              {"prototype_dim", w.rows()},
              {"class_names", meta.class_names},
              {"variant", to_string(meta.variant)},
              {"seed", meta.seed},
              {"steps", meta.steps},
              {"learning_rate", meta.learning_rate},
              {"template_id", meta.template_id},
              {"model_id", meta.model_id},
              {"n_way", meta.n_way},
              {"k_shot", meta.k_shot},
              {"episode_seed", meta.episode_seed},
              {"noise", {{"num_corrupted", meta.noise.num_corrupted}, {"corruption_seed", meta.noise.corruption_seed}}}};
  std::string out = header.dump() + '\n';
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    out += json{{"w_row", r}, {"values", row_values(w, r)}}.dump() + '\n';
  }
  for (Eigen::Index n = 0; n < c.rows(); ++n) {
    out += json{{"prototype", n}, {"class", meta.class_names.at(static_cast<std::size_t>(n))}, {"values", row_values(c, n)}}
               .dump() +
           '\n';
  }
  for (const auto& entry : cp.result.loss_trace) {
    out += json{{"step", entry.step},
                {"l_ins", entry.loss.instance},
                {"l_proto", entry.loss.prototype},
                {"total", entry.loss.total}}
               .dump() +
           '\n';
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  std::vector<std::pair<std::size_t, json>> lines;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("malformed checkpoint line", line_no);
    lines.emplace_back(line_no, std::move(j));
  }
  if (lines.empty()) throw DataError("empty checkpoint");

  const auto& [header_line, header] = lines.front();
  if (header.value("kind", "") != "protoverb_checkpoint") throw DataError("not a protoverb checkpoint", header_line);
  if (require<int>(header, "format_version", header_line) != kCheckpointFormatVersion) {
    throw DataError("unsupported checkpoint format_version", header_line);
  }
  Checkpoint cp;
  auto& meta = cp.meta;
  meta.dim = require<std::size_t>(header, "dim", header_line);
  const auto prototype_dim = require<std::size_t>(header, "prototype_dim", header_line);
  meta.class_names = require<std::vector<std::string>>(header, "class_names", header_line);
  const auto variant = parse_loss_variant(require<std::string>(header, "variant", header_line));
  if (!variant) throw DataError("unknown variant", header_line);
  meta.variant = *variant;
  meta.seed = require<std::uint64_t>(header, "seed", header_line);
  meta.steps = require<std::size_t>(header, "steps", header_line);
  meta.learning_rate = require<double>(header, "learning_rate", header_line);
  meta.template_id = require<std::string>(header, "template_id", header_line);
  meta.model_id = require<std::string>(header, "model_id", header_line);
  meta.n_way = require<std::size_t>(header, "n_way", header_line);
  meta.k_shot = require<std::size_t>(header, "k_shot", header_line);
  meta.episode_seed = require<std::uint64_t>(header, "episode_seed", header_line);
  const auto noise = header.find("noise");
  if (noise == header.end() || !noise->is_object()) throw DataError("missing 'noise'", header_line);
  meta.noise.num_corrupted = require<std::size_t>(*noise, "num_corrupted", header_line);
  meta.noise.corruption_seed = require<std::uint64_t>(*noise, "corruption_seed", header_line);
  if (meta.dim < 1 || prototype_dim < 1 || meta.class_names.empty()) {
    throw DataError("checkpoint dimensions must be positive", header_line);
  }

  const auto d = static_cast<Eigen::Index>(prototype_dim);
  const auto n_classes = static_cast<Eigen::Index>(meta.class_names.size());
  cp.result.encoder.weight = Matrix(d, static_cast<Eigen::Index>(meta.dim));
  cp.result.prototypes.prototypes = Matrix(n_classes, d);
  const std::size_t expected_rows = prototype_dim + meta.class_names.size();
  if (lines.size() < 1 + expected_rows) throw DataError("checkpoint truncated: missing weight or prototype rows");

  for (Eigen::Index r = 0; r < d; ++r) {
    const auto& [line, j] = lines[1 + static_cast<std::size_t>(r)];
    if (require<Eigen::Index>(j, "w_row", line) != r) throw DataError("weight rows out of order", line);
    read_row(j, cp.result.encoder.weight, r, line);
  }
  for (Eigen::Index n = 0; n < n_classes; ++n) {
    const auto& [line, j] = lines[1 + prototype_dim + static_cast<std::size_t>(n)];
    if (require<Eigen::Index>(j, "prototype", line) != n) throw DataError("prototype rows out of order", line);
    read_row(j, cp.result.prototypes.prototypes, n, line);
  }
  for (std::size_t i = 1 + expected_rows; i < lines.size(); ++i) {
    const auto& [line, j] = lines[i];
    LossTraceEntry entry;
    entry.step = require<std::size_t>(j, "step", line);
    entry.loss = {require<double>(j, "l_ins", line), require<double>(j, "l_proto", line), require<double>(j, "total", line)};
    cp.result.loss_trace.push_back(entry);
  }
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_text_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_text_file(path)); }

}  // namespace protoverb
