#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "irs/dataset.hpp"
#include "irs/error.hpp"
#include "irs/scm.hpp"

namespace irs {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

inline void append_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw InternalError("number formatting failed");
  out.append(buf.data(), end);
}

}  // namespace io_detail

/// Parses a comma-separated table with a mandatory header row.
/// `source` only labels error messages.
inline RawTable parse_csv(std::string_view text, const std::string& source = "<csv>") {
  using namespace io_detail;
  if (text.size() >= 3 && std::memcmp(text.data(), "\xEF\xBB\xBF", 3) == 0) text.remove_prefix(3);
  RawTable t;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (header) {
      for (auto f : fields) t.names.push_back(unquote(f));
      t.cols = t.names.size();
      header = false;
      continue;
    }
    if (fields.size() != t.cols)
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(t.cols) + " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto f = trim(fields[c]);
      if (!f.empty() && f.front() == '+') f.remove_prefix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size())
        throw ValidationError(source + ":" + std::to_string(line_no) + ": column '" + t.names[c] +
                              "': cannot parse '" + std::string(f) + "' as a number");
      t.values.push_back(v);
    }
    ++t.rows;
  }
  if (header) throw ValidationError(source + ": missing header row");
  return t;
}

inline std::string format_csv(const RawTable& t) {
  std::string out;
  for (std::size_t c = 0; c < t.cols; ++c) {
    if (c) out += ',';
    out += c < t.names.size() ? t.names[c] : "c" + std::to_string(c);
  }
  out += '\n';
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) {
      if (c) out += ',';
      io_detail::append_number(out, t.at(r, c));
    }
    out += '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline RawTable read_csv(const std::filesystem::path& path) {
  return parse_csv(io_detail::slurp(path), path.string());
}

inline void write_csv(const std::filesystem::path& path, const RawTable& t) {
  write_file(path, format_csv(t));
}

// ---- NPY v1.0 ----

enum class NpyType { f4, f8, i4, i8 };

namespace io_detail {

inline std::string dict_value(std::string_view header, std::string_view key, const std::string& source) {
  const std::string quoted = "'" + std::string(key) + "'";
  auto pos = header.find(quoted);
  if (pos == std::string_view::npos) throw ValidationError(source + ": NPY header lacks " + quoted);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) throw ValidationError(source + ": malformed NPY header");
  auto rest = trim(header.substr(pos + 1));
  std::size_t end = 0;
  if (!rest.empty() && rest.front() == '(') {
    end = rest.find(')');
    if (end == std::string_view::npos) throw ValidationError(source + ": malformed NPY shape");
    ++end;
  } else {
    end = rest.find_first_of(",}");
    if (end == std::string_view::npos) end = rest.size();
  }
  return std::string(trim(rest.substr(0, end)));
}

template <class T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

}  // namespace io_detail

/// Parses a 2-D C-order NPY v1.0 array ('<f4', '<f8', '<i4' or '<i8').
/// Columns are named `prefix` + index.
inline RawTable parse_npy(std::string_view bytes, const std::string& prefix,
                          const std::string& source = "<npy>") {
  using namespace io_detail;
  static_assert(std::endian::native == std::endian::little, "NPY reader assumes a little-endian host");
  if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0)
    throw ValidationError(source + ": not an NPY file (bad magic)");
  if (bytes[6] != 1 || bytes[7] != 0)
    throw ValidationError(source + ": unsupported NPY version " + std::to_string(int(bytes[6])) + "." +
                          std::to_string(int(bytes[7])) + " (need 1.0)");
  const auto hlen = static_cast<std::size_t>(static_cast<unsigned char>(bytes[8])) |
                    (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < 10 + hlen) throw ValidationError(source + ": truncated NPY header");
  const auto header = bytes.substr(10, hlen);

  const auto descr = unquote(std::string_view(dict_value(header, "descr", source)));
  std::string d = descr;
  if (d.size() >= 2 && (d.front() == '\'' || d.front() == '"')) d = d.substr(1, d.size() - 2);
  NpyType type;
  std::size_t width;
  if (d == "<f8") type = NpyType::f8, width = 8;
  else if (d == "<f4") type = NpyType::f4, width = 4;
  else if (d == "<i8") type = NpyType::i8, width = 8;
  else if (d == "<i4") type = NpyType::i4, width = 4;
  else throw ValidationError(source + ": unsupported dtype " + d);
  if (dict_value(header, "fortran_order", source) != "False")
    throw ValidationError(source + ": fortran_order arrays are not supported");

  const auto shape = dict_value(header, "shape", source);
  std::vector<std::size_t> dims;
  for (auto part : split(std::string_view(shape).substr(1, shape.size() - 2), ',')) {
    part = trim(part);
    if (part.empty()) continue;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size())
      throw ValidationError(source + ": malformed NPY shape " + shape);
    dims.push_back(v);
  }
  if (dims.size() != 2) throw ValidationError(source + ": expected a 2-D array, got shape " + shape);

  RawTable t;
  t.rows = dims[0];
  t.cols = dims[1];
  const auto count = t.rows * t.cols;
  const auto data = bytes.substr(10 + hlen);
  if (data.size() < count * width)
    throw ValidationError(source + ": payload holds " + std::to_string(data.size()) + " bytes, shape needs " +
                          std::to_string(count * width));
  t.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const char* p = data.data() + k * width;
    switch (type) {
      case NpyType::f8: t.values[k] = load_le<double>(p); break;
      case NpyType::f4: t.values[k] = load_le<float>(p); break;
      case NpyType::i8: t.values[k] = static_cast<double>(load_le<std::int64_t>(p)); break;
      case NpyType::i4: t.values[k] = load_le<std::int32_t>(p); break;
    }
  }
  for (std::size_t c = 0; c < t.cols; ++c) t.names.push_back(prefix + std::to_string(c));
  return t;
}

inline std::string format_npy(const RawTable& t, NpyType type = NpyType::f8) {
  std::string descr;
  switch (type) {
    case NpyType::f8: descr = "<f8"; break;
    case NpyType::f4: descr = "<f4"; break;
    case NpyType::i8: descr = "<i8"; break;
    case NpyType::i4: descr = "<i4"; break;
  }
  std::string header = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (" +
                       std::to_string(t.rows) + ", " + std::to_string(t.cols) + "), }";
  const std::size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header += '\n';
  std::string out("\x93NUMPY\x01\x00", 8);
  out += static_cast<char>(header.size() & 0xff);
  out += static_cast<char>((header.size() >> 8) & 0xff);
  out += header;
  for (double v : t.values) {
    char buf[8];
    switch (type) {
      case NpyType::f8: std::memcpy(buf, &v, 8); out.append(buf, 8); break;
      case NpyType::f4: { const auto f = static_cast<float>(v); std::memcpy(buf, &f, 4); out.append(buf, 4); break; }
      case NpyType::i8: { const auto i = static_cast<std::int64_t>(v); std::memcpy(buf, &i, 8); out.append(buf, 8); break; }
      case NpyType::i4: { const auto i = static_cast<std::int32_t>(v); std::memcpy(buf, &i, 4); out.append(buf, 4); break; }
    }
  }
  return out;
}

inline RawTable read_npy(const std::filesystem::path& path, const std::string& prefix) {
  return parse_npy(io_detail::slurp(path), prefix, path.string());
}

inline void write_npy(const std::filesystem::path& path, const RawTable& t, NpyType type = NpyType::f8) {
  write_file(path, format_npy(t, type));
}

/// Reads CSV or NPY by extension.
inline RawTable read_table(const std::filesystem::path& path, const std::string& prefix) {
  if (!std::filesystem::exists(path)) throw IoError("no such file '" + path.string() + "'");
  if (path.extension() == ".npy") return read_npy(path, prefix);
  return read_csv(path);
}

/// Picks the columns of `t` to use: the explicit list when non-empty (names or
/// 0-based indices), otherwise every column whose name starts with `prefix`,
/// otherwise all columns.
inline RawTable select_columns(const RawTable& t, const std::vector<std::string>& explicit_cols,
                               const std::string& prefix, const std::string& flag) {
  std::vector<std::size_t> pick;
  if (!explicit_cols.empty()) {
    for (const auto& want : explicit_cols) {
      auto it = std::find(t.names.begin(), t.names.end(), want);
      if (it != t.names.end()) {
        pick.push_back(static_cast<std::size_t>(it - t.names.begin()));
        continue;
      }
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(want.data(), want.data() + want.size(), idx);
      if (ec != std::errc{} || ptr != want.data() + want.size() || idx >= t.cols)
        throw ValidationError(flag + ": no column '" + want + "'");
      pick.push_back(idx);
    }
  } else {
    for (std::size_t c = 0; c < t.cols; ++c)
      if (t.names[c].rfind(prefix, 0) == 0) pick.push_back(c);
    if (pick.empty())
      for (std::size_t c = 0; c < t.cols; ++c) pick.push_back(c);
  }
  RawTable out;
  out.rows = t.rows;
  out.cols = pick.size();
  for (auto c : pick) out.names.push_back(t.names[c]);
  out.values.reserve(out.rows * out.cols);
  for (std::size_t r = 0; r < t.rows; ++r)
    for (auto c : pick) out.values.push_back(t.at(r, c));
  return out;
}

// ---- JSON documents ----

using Json = nlohmann::json;

namespace io_detail {

inline Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(source + ": invalid JSON: " + e.what());
  }
}

inline const Json& need(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "." + key + ": missing");
  return *it;
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  return j.get<double>();
}

inline std::size_t as_count(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw ValidationError(path + ": expected a non-negative integer");
  return j.get<std::size_t>();
}

inline std::vector<double> as_numbers(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_number(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

inline std::vector<std::size_t> as_counts(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path + ": expected an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_count(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

}  // namespace io_detail

inline DiscretizationPlan parse_plan(std::string_view text, const std::string& source = "<plan>") {
  using namespace io_detail;
  const Json doc = parse_json(text, source);
  DiscretizationPlan plan;
  const auto& list = need(doc, "factors", source);
  if (!list.is_array()) throw ValidationError(source + ".factors: expected an array");
  for (std::size_t k = 0; k < list.size(); ++k) {
    const std::string path = source + ".factors[" + std::to_string(k) + "]";
    const auto& e = list[k];
    FactorPlan fp;
    const auto& name = need(e, "name", path);
    if (!name.is_string()) throw ValidationError(path + ".name: expected a string");
    fp.name = name.get<std::string>();
    const auto& strategy = need(e, "strategy", path);
    if (!strategy.is_string()) throw ValidationError(path + ".strategy: expected a string");
    try {
      fp.strategy = parse_bin_strategy(strategy.get<std::string>());
    } catch (const ValidationError& err) {
      throw ValidationError(path + ".strategy: " + err.what());
    }
    if (e.contains("bins")) {
      fp.bins = static_cast<int>(as_count(e["bins"], path + ".bins"));
      if (fp.strategy != BinStrategy::discrete && fp.bins < 2)
        throw ValidationError(path + ".bins: must be >= 2");
    }
    plan.factors.push_back(fp);
  }
  return plan;
}

inline DiscretizationPlan read_plan(const std::filesystem::path& path) {
  return parse_plan(io_detail::slurp(path), path.string());
}

/// A generator description: SCM, encoder, and optional default seed.
struct ScmDocument {
  ScmConfig scm;
  SyntheticEncoder encoder;
  std::optional<std::uint64_t> seed;
};

namespace io_detail {

inline SyntheticEncoder parse_encoder(const Json& e, std::size_t k, const std::string& path) {
  SyntheticEncoder enc;
  const auto& kind = need(e, "kind", path);
  if (!kind.is_string()) throw ValidationError(path + ".kind: expected a string");
  const auto name = kind.get<std::string>();
  if (e.contains("noise")) enc.noise_scale = as_number(e["noise"], path + ".noise");
  if (name == "permutation") {
    enc.kind = EncoderKind::permutation;
    if (e.contains("permutation")) {
      enc.permutation = as_counts(e["permutation"], path + ".permutation");
    } else {
      for (std::size_t i = 0; i < k; ++i) enc.permutation.push_back(i);
    }
    enc.output_dim = e.contains("output_dim") ? as_count(e["output_dim"], path + ".output_dim") : k;
    if (e.contains("maps")) {
      const auto& maps = e["maps"];
      if (!maps.is_array()) throw ValidationError(path + ".maps: expected an array");
      for (std::size_t m = 0; m < maps.size(); ++m) {
        const std::string mp = path + ".maps[" + std::to_string(m) + "]";
        MonotoneMap map;
        if (maps[m].contains("scale")) map.scale = as_number(maps[m]["scale"], mp + ".scale");
        if (maps[m].contains("offset")) map.offset = as_number(maps[m]["offset"], mp + ".offset");
        if (maps[m].contains("power")) map.power = as_number(maps[m]["power"], mp + ".power");
        enc.maps.push_back(map);
      }
    } else {
      enc.maps.assign(enc.permutation.size(), MonotoneMap{});
    }
  } else if (name == "linear") {
    enc.kind = EncoderKind::linear;
    const auto& m = need(e, "matrix", path);
    if (!m.is_array() || m.empty()) throw ValidationError(path + ".matrix: expected a non-empty array of rows");
    enc.output_dim = m.size();
    for (std::size_t l = 0; l < m.size(); ++l) {
      auto row = as_numbers(m[l], path + ".matrix[" + std::to_string(l) + "]");
      if (row.size() != k)
        throw ValidationError(path + ".matrix[" + std::to_string(l) + "]: expected " + std::to_string(k) +
                              " entries, one per factor");
      enc.mixing.insert(enc.mixing.end(), row.begin(), row.end());
    }
    if (e.contains("bias")) enc.bias = as_numbers(e["bias"], path + ".bias");
  } else if (name == "polynomial") {
    enc.kind = EncoderKind::polynomial;
    const auto& outputs = need(e, "terms", path);
    if (!outputs.is_array() || outputs.empty())
      throw ValidationError(path + ".terms: expected a non-empty array (one term list per output)");
    enc.output_dim = outputs.size();
    for (std::size_t l = 0; l < outputs.size(); ++l) {
      const std::string lp = path + ".terms[" + std::to_string(l) + "]";
      if (!outputs[l].is_array()) throw ValidationError(lp + ": expected an array of terms");
      std::vector<PolynomialTerm> list;
      for (std::size_t t = 0; t < outputs[l].size(); ++t) {
        const std::string tp = lp + "[" + std::to_string(t) + "]";
        const auto& term = outputs[l][t];
        PolynomialTerm pt;
        if (term.contains("coefficient")) pt.coefficient = as_number(term["coefficient"], tp + ".coefficient");
        if (term.contains("powers")) pt.powers = as_numbers(term["powers"], tp + ".powers");
        if (term.contains("match")) {
          const auto& match = term["match"];
          if (!match.is_array()) throw ValidationError(tp + ".match: expected an array of [factor, value] pairs");
          for (std::size_t q = 0; q < match.size(); ++q) {
            const auto pair = as_counts(match[q], tp + ".match[" + std::to_string(q) + "]");
            if (pair.size() != 2)
              throw ValidationError(tp + ".match[" + std::to_string(q) + "]: expected [factor, value]");
            pt.match.emplace_back(pair[0], static_cast<std::int32_t>(pair[1]));
          }
        }
        list.push_back(std::move(pt));
      }
      enc.terms.push_back(std::move(list));
    }
  } else if (name == "constant") {
    enc.kind = EncoderKind::constant;
    enc.output_dim = e.contains("output_dim") ? as_count(e["output_dim"], path + ".output_dim") : 1;
    if (e.contains("value")) enc.constant = as_number(e["value"], path + ".value");
  } else {
    throw ValidationError(path + ".kind: unknown encoder kind '" + name +
                          "' (expected permutation, linear, polynomial or constant)");
  }
  try {
    enc.validate(k);
  } catch (const ValidationError& err) {
    throw ValidationError(path + ": " + err.what());
  }
  return enc;
}

}  // namespace io_detail

/// Parses a generator document:
///   {"confounders": [{"name", "prior"}],
///    "factors": [{"name", "cardinality", "parents", "table"}] | "cardinalities": [...],
///    "encoder": {...}, "seed": n}
/// A factor without "table" is uniform; "parents" lists confounder indices.
inline ScmDocument parse_scm(std::string_view text, const std::string& source = "<config>") {
  using namespace io_detail;
  const Json doc = parse_json(text, source);
  if (!doc.is_object()) throw ValidationError(source + ": expected a JSON object");
  ScmDocument out;
  if (doc.contains("confounders")) {
    const auto& list = doc["confounders"];
    if (!list.is_array()) throw ValidationError(source + ".confounders: expected an array");
    for (std::size_t a = 0; a < list.size(); ++a) {
      const std::string path = source + ".confounders[" + std::to_string(a) + "]";
      Confounder c;
      if (list[a].contains("name") && list[a]["name"].is_string()) c.name = list[a]["name"].get<std::string>();
      c.prior = as_numbers(need(list[a], "prior", path), path + ".prior");
      out.scm.confounders.push_back(std::move(c));
    }
  }
  if (doc.contains("factors")) {
    const auto& list = doc["factors"];
    if (!list.is_array()) throw ValidationError(source + ".factors: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = source + ".factors[" + std::to_string(i) + "]";
      FactorMechanism f;
      if (list[i].contains("name") && list[i]["name"].is_string()) f.name = list[i]["name"].get<std::string>();
      f.cardinality = as_count(need(list[i], "cardinality", path), path + ".cardinality");
      if (list[i].contains("parents")) f.parents = as_counts(list[i]["parents"], path + ".parents");
      if (list[i].contains("table")) {
        const auto& table = list[i]["table"];
        if (!table.is_array()) throw ValidationError(path + ".table: expected an array of rows");
        for (std::size_t r = 0; r < table.size(); ++r)
          f.table.push_back(as_numbers(table[r], path + ".table[" + std::to_string(r) + "]"));
      } else if (f.parents.empty() && f.cardinality > 0) {
        f.table.assign(1, std::vector<double>(f.cardinality, 1.0 / static_cast<double>(f.cardinality)));
      }
      out.scm.factors.push_back(std::move(f));
    }
  } else if (doc.contains("cardinalities")) {
    out.scm = uniform_scm(as_counts(doc["cardinalities"], source + ".cardinalities"));
  } else {
    throw ValidationError(source + ".factors: missing (or give \"cardinalities\")");
  }
  try {
    validate(out.scm);
  } catch (const ValidationError& err) {
    throw ValidationError(source + "." + err.what());
  }
  out.encoder = parse_encoder(need(doc, "encoder", source), out.scm.factors.size(), source + ".encoder");
  if (doc.contains("seed")) out.seed = as_count(doc["seed"], source + ".seed");
  return out;
}

inline ScmDocument read_scm(const std::filesystem::path& path) {
  return parse_scm(io_detail::slurp(path), path.string());
}

}  // namespace irs
