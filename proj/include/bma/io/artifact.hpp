#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bma/averaging.hpp"
#include "bma/errors.hpp"
#include "bma/io/csv.hpp"
#include "bma/metrics.hpp"
#include "bma/models/scenario.hpp"
#include "bma/pipeline.hpp"

namespace bma::io {

inline constexpr std::array<std::string_view, 5> kQuantileSuffixes{"q025", "q25", "q50", "q75", "q975"};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

namespace detail {

inline void append_summary_header(std::string& h, const std::string& prefix) {
  h += "," + prefix + "_mean";
  for (auto q : kQuantileSuffixes) h += "," + prefix + "_" + std::string(q);
}

inline void append_summary(std::string& line, const PosteriorSummary& s) {
  line += "," + fmt(s.mean);
  for (double q : s.quantiles) line += "," + fmt(q);
}

}  // namespace detail

/// estimates.csv: one row per time step, per-model and averaged columns.
inline std::string format_estimates(const RunArtifact& art) {
  std::string out = "time,date,phase,observed";
  for (const auto& n : art.models) {
    detail::append_summary_header(out, n + "_inc");
    detail::append_summary_header(out, n + "_rt");
    out += "," + n + "_pi," + n + "_ess";
  }
  detail::append_summary_header(out, "ma_inc");
  detail::append_summary_header(out, "ma_rt");
  out += '\n';
  for (const auto& r : art.estimates) {
    out += std::to_string(r.time) + "," + r.date + "," + r.phase + ",";
    if (r.y) out += std::to_string(*r.y);
    for (std::size_t k = 0; k < art.models.size(); ++k) {
      detail::append_summary(out, r.model_incidence[k]);
      detail::append_summary(out, r.model_rt[k]);
      out += "," + fmt(r.pis[k]) + ",";
      if (k < r.ess.size()) out += fmt(r.ess[k]);
    }
    detail::append_summary(out, r.ma_incidence);
    detail::append_summary(out, r.ma_rt);
    out += '\n';
  }
  return out;
}

inline std::string format_parameters(const RunArtifact& art) {
  std::string out = "time,model,parameter,mean";
  for (auto q : kQuantileSuffixes) out += "," + std::string(q);
  out += '\n';
  for (const auto& r : art.parameters) {
    out += std::to_string(r.time) + "," + r.model + "," + r.parameter;
    detail::append_summary(out, r.summary);
    out += '\n';
  }
  return out;
}

inline std::string format_diagnostics(const RunArtifact& art) {
  std::string out =
      "time,model,observed,ess,rejuvenated,ess_after,proposals,accepted,acceptance_rate,off_support,"
      "degenerate_filters,log_evidence_term,log_evidence,pi\n";
  for (const auto& r : art.diagnostics) {
    const auto& d = r.step;
    out += std::to_string(r.time) + "," + r.model + "," + (d.observed ? "1" : "0") + "," + fmt(d.ess) + "," +
           (d.rejuvenated ? "1" : "0") + "," + fmt(d.ess_after) + "," + std::to_string(d.proposals) + "," +
           std::to_string(d.accepted) + "," + fmt(d.acceptance_rate()) + "," + std::to_string(d.off_support) + "," +
           std::to_string(d.degenerate_filters) + "," + fmt(d.log_evidence_term) + "," + fmt(r.log_evidence) + "," +
           fmt(r.pi) + "\n";
  }
  return out;
}

inline std::string format_samples(const RunArtifact& art) {
  const std::size_t k = art.samples.empty() ? 0 : art.samples.front().values.size();
  std::string out = "time,phase,target,estimator";
  for (std::size_t j = 0; j < k; ++j) out += ",s" + std::to_string(j);
  out += '\n';
  for (const auto& r : art.samples) {
    out += std::to_string(r.time) + "," + r.phase + "," + r.target + "," + r.estimator;
    for (double v : r.values) out += "," + fmt(v);
    out += '\n';
  }
  return out;
}

/// Writes estimates.csv, parameters.csv, diagnostics.csv, samples.csv and
/// run.json. Contents depend only on configuration, data and seed.
inline void write_artifact(const std::filesystem::path& dir, const RunArtifact& art) {
  std::filesystem::create_directories(dir);
  write_text(dir / "estimates.csv", format_estimates(art));
  write_text(dir / "parameters.csv", format_parameters(art));
  write_text(dir / "diagnostics.csv", format_diagnostics(art));
  write_text(dir / "samples.csv", format_samples(art));
  write_text(dir / "run.json", art.metadata.dump(2) + "\n");
}

/// truth.csv of a simulated scenario: flows, reproduction number and compartments.
inline std::string format_truth(const ScenarioData& d) {
  std::string out = "time,incidence,rt,beta,s,e,i,r\n";
  for (std::size_t t = 0; t < d.observations.size(); ++t) {
    const auto& s = d.states[t];
    out += std::to_string(t + 1) + "," + std::to_string(d.observations[t]) + "," + fmt(d.true_rt[t]) + "," +
           fmt(d.true_beta[t]) + "," + std::to_string(s.s) + "," + std::to_string(s.e) + "," + std::to_string(s.i) +
           "," + std::to_string(s.r) + "\n";
  }
  return out;
}

/// Settings of a simulated scenario, written next to its truth.
inline nlohmann::json scenario_to_json(const ScenarioSpec& spec, std::uint64_t seed) {
  return {{"scenario", std::string(scenario_name(spec.id))},
          {"seed", seed},
          {"population", spec.population},
          {"horizon", spec.horizon},
          {"sigma", spec.sigma},
          {"gamma", spec.gamma},
          {"initial", {{"s", spec.initial[0]}, {"e", spec.initial[1]}, {"i", spec.initial[2]}, {"r", spec.initial[3]}}}};
}

/// Known values by time step (1-based).
struct Truth {
  std::map<std::size_t, double> incidence;
  std::map<std::size_t, double> rt;
};

/// Reads a truth.csv written by `simulate`, or a `date,count` series whose
/// rows are steps 1, 2, ...
inline Truth read_truth(const std::string& path) {
  const auto table = read_table(path);
  Truth truth;
  if (table.column("time") && table.column("incidence")) {
    const auto ct = *table.column("time");
    const auto ci = *table.column("incidence");
    const auto cr = table.column("rt");
    for (const auto& row : table.rows) {
      const auto t = parse_optional_double(row[ct]);
      if (!t || *t < 1) throw DataError(path + ": bad time '" + row[ct] + "'");
      const auto step = static_cast<std::size_t>(*t);
      if (const auto v = parse_optional_double(row[ci])) truth.incidence[step] = *v;
      if (cr)
        if (const auto v = parse_optional_double(row[*cr])) truth.rt[step] = *v;
    }
    return truth;
  }
  const auto series = ingest_csv(path);
  for (std::size_t t = 0; t < series.size(); ++t)
    if (series.counts[t]) truth.incidence[t + 1] = static_cast<double>(*series.counts[t]);
  return truth;
}

/// Scores every estimator in a run directory against the truth, for each
/// target with known values and each phase present in the run.
inline std::vector<ScoreReport> evaluate_run(const std::filesystem::path& run_dir, const Truth& truth) {
  const auto est_path = (run_dir / "estimates.csv").string();
  const auto smp_path = (run_dir / "samples.csv").string();
  const auto est = read_table(est_path);
  const auto smp = read_table(smp_path);

  std::vector<std::string> estimators;
  for (const auto& h : est.header) {
    const std::string suffix = "_inc_mean";
    if (h.size() > suffix.size() && h.compare(h.size() - suffix.size(), suffix.size(), suffix) == 0)
      estimators.push_back(h.substr(0, h.size() - suffix.size()));
  }
  if (estimators.empty()) throw DataError(est_path + ": no estimator columns");

  const auto c_time = est.require("time", est_path);
  const auto c_phase = est.require("phase", est_path);
  const auto s_time = smp.require("time", smp_path);
  const auto s_phase = smp.require("phase", smp_path);
  const auto s_target = smp.require("target", smp_path);
  const auto s_est = smp.require("estimator", smp_path);
  const auto s_first = s_est + 1;

  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, std::vector<double>> sample_sets;
  for (const auto& row : smp.rows) {
    std::vector<double> values;
    for (std::size_t j = s_first; j < row.size(); ++j) values.push_back(parse_optional_double(row[j]).value_or(0.0));
    sample_sets[{row[s_phase], row[s_target], row[s_est], std::stoul(row[s_time])}] = std::move(values);
  }

  std::vector<ScoreReport> out;
  for (const auto& [phase_label, phase] : {std::pair{"fit", ScorePhase::kInSample},
                                           std::pair{"forecast", ScorePhase::kForecast}}) {
    for (const auto target : {ScoreTarget::kIncidence, ScoreTarget::kRt}) {
      const auto& known = target == ScoreTarget::kRt ? truth.rt : truth.incidence;
      if (known.empty()) continue;
      const std::string tag = target == ScoreTarget::kRt ? "rt" : "inc";
      for (const auto& name : estimators) {
        const auto c_mean = est.require(name + "_" + tag + "_mean", est_path);
        const auto c_lo = est.require(name + "_" + tag + "_q025", est_path);
        const auto c_hi = est.require(name + "_" + tag + "_q975", est_path);
        std::vector<std::optional<double>> z;
        std::vector<double> mean;
        std::vector<std::pair<double, double>> interval;
        std::vector<std::vector<double>> sets;
        for (const auto& row : est.rows) {
          if (row[c_phase] != phase_label) continue;
          const auto t = static_cast<std::size_t>(std::stoul(row[c_time]));
          const auto it = known.find(t);
          if (it == known.end()) continue;
          z.emplace_back(it->second);
          mean.push_back(parse_optional_double(row[c_mean]).value_or(std::nan("")));
          interval.emplace_back(parse_optional_double(row[c_lo]).value_or(std::nan("")),
                                parse_optional_double(row[c_hi]).value_or(std::nan("")));
          const auto s = sample_sets.find({phase_label, std::string(target_name(target)), name, t});
          if (s == sample_sets.end())
            throw DataError(smp_path + ": no samples for " + name + " at time " + std::to_string(t));
          sets.push_back(s->second);
        }
        if (z.empty()) continue;
        ScoreReport r;
        r.estimator = name;
        r.target = target;
        r.phase = phase;
        r.rmse = rmse(z, mean);
        r.coverage = coverage(z, interval);
        r.crps = crps_particles(z, sets, &r.crps_series);
        out.push_back(std::move(r));
      }
    }
  }
  if (out.empty()) throw DataError("no time step of the run has a matching truth value");
  return out;
}

/// scores.csv: for each (phase, target), one row per metric and one column
/// per estimator.
inline std::string format_scores(const std::vector<ScoreReport>& reports) {
  std::vector<std::string> estimators;
  for (const auto& r : reports)
    if (std::find(estimators.begin(), estimators.end(), r.estimator) == estimators.end())
      estimators.push_back(r.estimator);
  std::string out = "phase,target,metric";
  for (const auto& e : estimators) out += "," + e;
  out += '\n';
  for (const auto phase : {ScorePhase::kInSample, ScorePhase::kForecast}) {
    for (const auto target : {ScoreTarget::kIncidence, ScoreTarget::kRt}) {
      std::vector<const ScoreReport*> row(estimators.size(), nullptr);
      bool any = false;
      for (const auto& r : reports)
        if (r.phase == phase && r.target == target) {
          const auto idx = std::find(estimators.begin(), estimators.end(), r.estimator) - estimators.begin();
          row[static_cast<std::size_t>(idx)] = &r;
          any = true;
        }
      if (!any) continue;
      for (const auto metric : {"rmse", "coverage", "crps"}) {
        out += std::string(phase_name(phase)) + "," + std::string(target_name(target)) + "," + metric;
        for (const auto* r : row) {
          out += ",";
          if (!r) continue;
          const std::string m = metric;
          out += fmt(m == "rmse" ? r->rmse : m == "coverage" ? r->coverage : r->crps);
        }
        out += '\n';
      }
    }
  }
  return out;
}

inline nlohmann::json scores_to_json(const std::vector<ScoreReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json series = nlohmann::json::array();
    for (double c : r.crps_series) series.push_back(std::isnan(c) ? nlohmann::json(nullptr) : nlohmann::json(c));
    arr.push_back({{"estimator", r.estimator}, {"target", std::string(target_name(r.target))},
                   {"phase", std::string(phase_name(r.phase))}, {"rmse", r.rmse}, {"coverage", r.coverage},
                   {"crps", r.crps}, {"crps_series", series}});
  }
  return {{"scores", arr}};
}

}  // namespace bma::io
