#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irs/estimator.hpp"
#include "irs/mutual_information.hpp"
#include "irs/partition.hpp"
#include "irs/viz.hpp"

namespace irs {

using Json = nlohmann::json;

namespace json_detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
Json optional_or_null(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace json_detail

inline Json to_json(const EstimatorConfig& cfg) {
  return Json{{"distance", std::string(to_string(cfg.distance))},
              {"mode", std::string(to_string(cfg.mode))},
              {"self_normalize", cfg.self_normalize},
              {"min_cell_size", cfg.min_cell_size},
              {"clamp", cfg.clamp},
              {"activity_threshold", cfg.activity_threshold},
              {"fast_path", std::string(to_string(cfg.fast_path))},
              {"workers", cfg.workers}};
}

inline Json to_json(const IrsReport& rep) {
  Json matrix = Json::array();
  for (std::size_t l = 0; l < rep.feature_count; ++l) {
    Json row = Json::array();
    for (std::size_t i = 0; i < rep.factor_count; ++i) row.push_back(json_detail::number_or_null(rep.at(l, i)));
    matrix.push_back(std::move(row));
  }
  Json per = Json::array();
  for (const auto& fs : rep.per_feature)
    per.push_back({{"feature", fs.feature},
                   {"D", json_detail::optional_or_null(fs.score)},
                   {"i_star", json_detail::optional_or_null(fs.argmax)},
                   {"weight", fs.weight},
                   {"active", fs.active}});
  Json cfg = to_json(rep.config);
  cfg["fast_path_used"] = rep.fast_path_used;
  return Json{{"metric", "irs"},
              {"matrix", std::move(matrix)},
              {"per_feature", std::move(per)},
              {"overall", json_detail::optional_or_null(rep.overall)},
              {"config", std::move(cfg)},
              {"warnings", rep.warnings}};
}

inline Json to_json(const MiReport& rep) {
  Json matrix = Json::array();
  for (std::size_t l = 0; l < rep.matrix.feature_count; ++l) {
    Json row = Json::array();
    for (std::size_t i = 0; i < rep.matrix.factor_count; ++i) row.push_back(rep.matrix.at(l, i));
    matrix.push_back(std::move(row));
  }
  Json per = Json::array();
  for (std::size_t l = 0; l < rep.scores.per_feature.size(); ++l)
    per.push_back({{"feature", l},
                   {"D", rep.scores.per_feature[l]},
                   {"i_star", rep.scores.argmax[l]},
                   {"weight", 1.0},
                   {"active", true}});
  return Json{{"metric", "mi"},
              {"matrix", std::move(matrix)},
              {"per_feature", std::move(per)},
              {"overall", rep.scores.average},
              {"config", {{"buckets", rep.matrix.buckets}, {"log_base", "e"}}},
              {"warnings", Json::array()}};
}

inline Json to_json(const VizCurveSet& v) {
  Json out{{"feature", v.feature}, {"active", v.active}, {"status", v.status}};
  if (!v.active) return out;
  out["i_star"] = *v.i_star;
  out["D"] = json_detail::optional_or_null(v.score);
  Json diag = Json::array();
  for (const auto& p : v.diagonal)
    diag.push_back({{"realization", p.realization},
                    {"level", p.level},
                    {"mean", p.mean},
                    {"std", p.std_dev},
                    {"count", p.count}});
  out["diagonal"] = {{"factor", *v.i_star}, {"band", "per-cell standard deviation"}, {"points", std::move(diag)}};
  Json cols = Json::array();
  for (const auto& c : v.columns) {
    Json curves = Json::array();
    for (const auto& cv : c.curves) {
      Json pts = Json::array();
      for (const auto& p : cv.points)
        pts.push_back({{"realization", p.realization}, {"level", p.level}, {"mean", p.mean}, {"samples", p.samples}});
      curves.push_back({{"anchor", cv.anchor}, {"anchor_level", cv.anchor_level}, {"points", std::move(pts)}});
    }
    cols.push_back({{"factor", c.factor}, {"flatness", c.flatness}, {"curves", std::move(curves)}});
  }
  out["columns"] = std::move(cols);
  return out;
}

/// Keys and sizes of every outer and inner cell.
inline Json partition_skeleton(const PartitionTable& p) {
  Json outer = Json::array();
  for (std::size_t k = 0; k < p.outer_count(); ++k) {
    Json inner = Json::array();
    for (std::size_t m = 0; m < p.inner_count(k); ++m) {
      const auto key = p.inner_key(k, m);
      inner.push_back({{"key", std::vector<std::int32_t>(key.begin(), key.end())}, {"size", p.inner_rows(k, m).size()}});
    }
    const auto key = p.outer_key(k);
    outer.push_back({{"key", std::vector<std::int32_t>(key.begin(), key.end())},
                     {"size", p.outer_rows(k).size()},
                     {"inner", std::move(inner)}});
  }
  return Json{{"rows", p.rows()}, {"outer", std::move(outer)}};
}

}  // namespace irs
