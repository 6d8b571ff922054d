#include "facecamo/eval_harness.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "facecamo/errors.hpp"
#include "facecamo/io.hpp"
#include "facecamo/parallel.hpp"
#include "facecamo/rng.hpp"

namespace facecamo {

namespace {

int effective_jobs(const std::vector<ModelHandle>& models, int jobs) {
  for (const ModelHandle& m : models)
    if (!m.model || !m.model->concurrency_safe()) return 1;
  return std::max(1, jobs);
}

void require_calibrated(const std::vector<ModelHandle>& models) {
  for (const ModelHandle& m : models)
    if (!m.threshold) throw ContractError("model '" + m.name + "' is not calibrated");
}

std::vector<MatedScorer> make_scorers(const std::vector<ModelHandle>& models,
                                      const std::vector<VerificationPair>& pairs, int jobs) {
  std::vector<std::optional<MatedScorer>> tmp(models.size());
  parallel_for(models.size(), jobs, [&](std::size_t m) { tmp[m].emplace(models[m], pairs); });
  std::vector<MatedScorer> out;
  for (auto& s : tmp) out.push_back(std::move(*s));
  return out;
}

std::string attribute_key(const std::map<std::string, std::string>& attrs) {
  std::string out;
  for (const auto& [k, v] : attrs) {
    if (!out.empty()) out += ",";
    out += k + "=" + v;
  }
  return out;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string params_summary(const PatternParams& p) {
  std::ostringstream os;
  os << to_string(p.family) << "/" << to_string(p.mode) << " w=" << format_fixed(p.width_frac)
     << " a=" << format_fixed(p.angle) << " phase=" << format_fixed(p.phase) << " colors=";
  for (std::size_t k = 0; k < p.colors.size(); ++k) {
    if (k) os << ";";
    os << format_fixed(p.colors[k][0], 1) << "," << format_fixed(p.colors[k][1], 1) << ","
       << format_fixed(p.colors[k][2], 1);
  }
  return os.str();
}

void write_tsv(const std::filesystem::path& path, const std::string& schema,
               const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  os << "# schema: " << schema << "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "\t" : "") << cells[i];
    os << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  write_text_file(path, os.str());
}

Json detection_json(const Detection& d) {
  return Json{{"box", {d.left, d.top, d.right, d.bottom}},
              {"left_eye", {d.left_eye.x, d.left_eye.y}},
              {"right_eye", {d.right_eye.x, d.right_eye.y}}};
}

}  // namespace

std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s = buf;
  // Avoid "-0.0000" so reports do not depend on the sign of zero.
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

double median(std::vector<double> v) {
  if (v.empty()) throw ContractError("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) throw ContractError("statistics of empty set");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

BaselineStats run_random_baseline(const std::vector<ModelHandle>& models,
                                  const std::vector<VerificationPair>& pairs, int n_patterns,
                                  int n_identities, std::uint64_t seed, const EvalSettings& settings) {
  if (n_patterns < 1) throw ConfigError("n_patterns must be >= 1");
  if (n_identities < 1) throw ConfigError("n_identities must be >= 1");
  require_calibrated(models);
  const std::vector<VerificationPair> mated = mated_pairs(pairs, {});
  if (static_cast<std::size_t>(n_identities) > mated.size())
    throw DataError("requested " + std::to_string(n_identities) + " identities but only " +
                    std::to_string(mated.size()) + " mated pairs are available");

  Rng rng(seed);
  std::vector<std::size_t> order(mated.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[uniform_index(rng, k + 1)]);
  order.resize(static_cast<std::size_t>(n_identities));
  std::sort(order.begin(), order.end());
  std::vector<VerificationPair> chosen;
  for (std::size_t i : order) chosen.push_back(mated[i]);

  std::vector<PatternImage> patterns;
  for (int k = 0; k < n_patterns; ++k) {
    const Family f = uniform_index(rng, 2) == 0 ? Family::kStripes : Family::kChevrons;
    patterns.push_back(rasterize(sample_random_params(rng, f, Mode::kUnconstrained), settings.canvas,
                                 settings.canvas, settings.softness));
  }

  const int jobs = effective_jobs(models, settings.jobs);
  const std::vector<MatedScorer> scorers = make_scorers(models, chosen, jobs);
  const std::size_t np = patterns.size();
  std::vector<double> rates(models.size() * np);
  std::vector<double> clean(models.size());
  parallel_for(models.size() * (np + 1), jobs, [&](std::size_t cell) {
    const std::size_t m = cell / (np + 1), k = cell % (np + 1);
    if (k == np) clean[m] = scorers[m].rate(nullptr, nullptr);
    else rates[m * np + k] = scorers[m].rate(&patterns[k], &settings.blend);
  });

  BaselineStats out;
  out.n_patterns = n_patterns;
  out.n_identities = n_identities;
  out.seed = seed;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::vector<double> r(rates.begin() + m * np, rates.begin() + (m + 1) * np);
    const auto [mean, sd] = mean_std(r);
    out.rows.push_back({models[m].name, clean[m], mean, sd, *std::min_element(r.begin(), r.end()),
                        *std::max_element(r.begin(), r.end())});
  }
  return out;
}

const TransferCell* TransferMatrix::find(const std::string& opt, const std::string& eval, Family f,
                                         Mode m) const {
  for (const TransferCell& c : cells)
    if (c.opt_model == opt && c.eval_model == eval && c.family == f && c.mode == m) return &c;
  return nullptr;
}

TransferMatrix run_transfer_matrix(const std::vector<PatternEntry>& patterns,
                                   const std::vector<std::string>& optimization_models,
                                   const std::vector<ModelHandle>& eval_models,
                                   const std::vector<VerificationPair>& pairs,
                                   const EvalSettings& settings) {
  require_calibrated(eval_models);
  std::set<std::pair<Family, Mode>> groups;
  for (const PatternEntry& e : patterns) {
    if (std::find(optimization_models.begin(), optimization_models.end(), e.opt_model) ==
        optimization_models.end())
      throw ConfigError("pattern for unknown optimization model '" + e.opt_model + "'");
    groups.insert({e.params.family, e.params.mode});
  }

  TransferMatrix out;
  out.optimization_models = optimization_models;
  for (const ModelHandle& m : eval_models) out.evaluation_models.push_back(m.name);

  struct Job {
    std::size_t cell;
    std::size_t eval;
    const PatternEntry* entry;
  };
  std::vector<Job> jobs;
  for (const auto& [family, mode] : groups) {
    for (const std::string& opt : optimization_models) {
      const PatternEntry* entry = nullptr;
      for (const PatternEntry& e : patterns)
        if (e.opt_model == opt && e.params.family == family && e.params.mode == mode) {
          if (entry) throw ConfigError("duplicate pattern for " + opt + " " + std::string(to_string(family)) +
                                       "/" + std::string(to_string(mode)));
          entry = &e;
        }
      for (std::size_t em = 0; em < eval_models.size(); ++em) {
        TransferCell c;
        c.opt_model = opt;
        c.eval_model = eval_models[em].name;
        c.family = family;
        c.mode = mode;
        if (entry) jobs.push_back({out.cells.size(), em, entry});
        out.cells.push_back(std::move(c));
      }
    }
  }

  const int nj = effective_jobs(eval_models, settings.jobs);
  const std::vector<MatedScorer> scorers = make_scorers(eval_models, pairs, nj);
  parallel_for(jobs.size(), nj, [&](std::size_t j) {
    const Job& job = jobs[j];
    const PatternImage img =
        rasterize(job.entry->params, settings.canvas, settings.canvas, settings.softness);
    out.cells[job.cell].accuracy = scorers[job.eval].rate(&img, &settings.blend);
  });

  for (const auto& [family, mode] : groups)
    for (const std::string& em : out.evaluation_models) {
      double best = std::numeric_limits<double>::infinity();
      for (const TransferCell& c : out.cells)
        if (c.family == family && c.mode == mode && c.eval_model == em && c.accuracy)
          best = std::min(best, *c.accuracy);
      for (TransferCell& c : out.cells)
        if (c.family == family && c.mode == mode && c.eval_model == em && c.accuracy)
          c.column_min = *c.accuracy == best;
    }
  return out;
}

NeighborhoodResult run_neighborhood_check(const PatternParams& center,
                                          const std::vector<ModelHandle>& models,
                                          const std::vector<VerificationPair>& pairs, int n_neighbors,
                                          const NeighborhoodDeltas& deltas, std::uint64_t seed,
                                          const EvalSettings& settings) {
  if (!within_bounds(center)) throw ConfigError("neighborhood center is outside the parameter bounds");
  if (n_neighbors < 1) throw ConfigError("n_neighbors must be >= 1");
  require_calibrated(models);
  Rng rng(seed);
  std::vector<PatternImage> images;
  images.push_back(rasterize(center, settings.canvas, settings.canvas, settings.softness));
  for (int k = 0; k < n_neighbors; ++k) {
    const PatternParams q =
        perturb_params(center, deltas.color, deltas.width_px, deltas.angle_deg, settings.canvas, rng);
    images.push_back(rasterize(q, settings.canvas, settings.canvas, settings.softness));
  }

  const int jobs = effective_jobs(models, settings.jobs);
  const std::vector<MatedScorer> scorers = make_scorers(models, pairs, jobs);
  const std::size_t ni = images.size();
  std::vector<double> acc(models.size() * ni);
  parallel_for(acc.size(), jobs, [&](std::size_t cell) {
    acc[cell] = scorers[cell / ni].rate(&images[cell % ni], &settings.blend);
  });

  NeighborhoodResult out;
  out.center = center;
  out.deltas = deltas;
  out.n_neighbors = n_neighbors;
  for (std::size_t m = 0; m < models.size(); ++m) {
    NeighborhoodRow row;
    row.model = models[m].name;
    row.center_accuracy = acc[m * ni];
    row.neighbor_accuracies.assign(acc.begin() + m * ni + 1, acc.begin() + (m + 1) * ni);
    double abs_sum = 0.0;
    for (double a : row.neighbor_accuracies) abs_sum += std::abs(a - row.center_accuracy);
    row.mean_abs_delta = abs_sum / n_neighbors;
    row.std = mean_std(row.neighbor_accuracies).second;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<ExternalRecord> read_external_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("external manifest not found: " + path.string());
  std::vector<ExternalRecord> out;
  for (const Json& j : read_jsonl(path, kExternalSchema)) {
    try {
      ExternalRecord r;
      r.image = j.at("image").get<std::string>();
      r.identity = j.at("identity").get<std::string>();
      r.pattern_id = j.at("pattern_id").get<std::string>();
      r.stage = j.at("stage").get<std::string>();
      if (r.stage != "generated" && r.stage != "physical")
        throw DataError("unknown stage '" + r.stage + "' (expected generated or physical)");
      if (j.contains("attributes"))
        for (const auto& [k, v] : j["attributes"].items())
          r.attributes[k] = v.is_string() ? v.get<std::string>() : v.dump();
      if (j.contains("mask")) r.mask = j["mask"].get<std::string>();
      if (j.contains("labels")) r.labels = j["labels"].get<std::string>();
      if (j.contains("detection")) {
        const Json& d = j["detection"];
        Detection det;
        det.left = d.at("box").at(0);
        det.top = d.at("box").at(1);
        det.right = d.at("box").at(2);
        det.bottom = d.at("box").at(3);
        det.left_eye = {d.at("left_eye").at(0), d.at("left_eye").at(1)};
        det.right_eye = {d.at("right_eye").at(0), d.at("right_eye").at(1)};
        r.detection = det;
      }
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": malformed external record: " + e.what());
    }
  }
  return out;
}

void write_external_manifest(const std::filesystem::path& path, const std::vector<ExternalRecord>& records) {
  std::vector<Json> lines;
  for (const ExternalRecord& r : records) {
    Json j{{"image", r.image}, {"identity", r.identity}, {"pattern_id", r.pattern_id}, {"stage", r.stage}};
    if (!r.attributes.empty()) j["attributes"] = r.attributes;
    if (r.mask) j["mask"] = *r.mask;
    if (r.labels) j["labels"] = *r.labels;
    if (r.detection) j["detection"] = detection_json(*r.detection);
    lines.push_back(std::move(j));
  }
  write_jsonl(path, kExternalSchema, lines);
}

ExternalTable evaluate_external(const std::vector<ExternalRecord>& records,
                                const std::filesystem::path& base_dir,
                                const std::vector<ModelHandle>& models, const FaceDataset& gallery,
                                const PreprocessConfig& preprocess_cfg, int jobs) {
  require_calibrated(models);
  ExternalTable out;
  if (records.empty()) return out;

  std::map<std::string, std::vector<std::shared_ptr<const FaceSample>>> by_id;
  for (const auto& s : gallery.split("eval")) by_id[s->identity].push_back(s);

  const FixtureDetector detector;
  const FixtureParser parser;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base_dir / fp;
  };
  std::vector<std::optional<FaceSample>> probes(records.size());
  std::vector<std::string> problems(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const ExternalRecord& r = records[i];
    if (!by_id.count(r.identity)) {
      problems[i] = "identity '" + r.identity + "' is not in the gallery";
      return;
    }
    try {
      RawFace raw = load_raw_face(resolve(r.image));
      raw.fixture_detection = r.detection;
      if (r.labels) raw.label_map_path = resolve(*r.labels);
      if (r.mask) raw.mask_path = resolve(*r.mask);
      probes[i] = preprocess(raw, detector, parser, preprocess_cfg, r.identity);
    } catch (const DetectionError& e) {
      problems[i] = e.what();
    } catch (const SegmentationError& e) {
      problems[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < records.size(); ++i)
    if (!probes[i]) {
      std::cerr << "warning: skipping " << records[i].image << ": " << problems[i] << "\n";
      ++out.skipped;
    }

  const int nj = effective_jobs(models, jobs);
  // sims[m][i]: similarities of probe i against each gallery image, model m.
  std::vector<std::vector<std::vector<double>>> sims(models.size(),
                                                     std::vector<std::vector<double>>(records.size()));
  parallel_for(models.size(), nj, [&](std::size_t m) {
    std::map<const FaceSample*, Embedding> anchors;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!probes[i]) continue;
      const Embedding y = embed(models[m], probes[i]->image);
      for (const auto& g : by_id.at(records[i].identity)) {
        auto it = anchors.find(g.get());
        if (it == anchors.end()) it = anchors.emplace(g.get(), embed(models[m], g->image)).first;
        sims[m][i].push_back(cosine_similarity(y, it->second));
      }
    }
  });

  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (probes[i])
      groups[{records[i].pattern_id, records[i].stage, attribute_key(records[i].attributes)}].push_back(i);
  for (const auto& [key, idx] : groups) {
    for (std::size_t m = 0; m < models.size(); ++m) {
      std::vector<double> all;
      for (std::size_t i : idx) all.insert(all.end(), sims[m][i].begin(), sims[m][i].end());
      ExternalRow row;
      row.pattern_id = std::get<0>(key);
      row.stage = std::get<1>(key);
      row.attributes = std::get<2>(key);
      row.model = models[m].name;
      row.comparisons = static_cast<int>(all.size());
      row.accuracy = acceptance_rate(all, *models[m].threshold);
      row.median_similarity = median(all);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractError("paired t-test needs equal-length samples");
  if (a.size() < 2) throw ContractError("paired t-test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult r;
  r.df = n - 1.0;
  r.mean_difference = mean;
  if (sd == 0.0) {
    r.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    r.p = mean == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

std::vector<SimilaritySummaryRow> similarity_summary(
    const std::vector<std::pair<std::string, PatternParams>>& patterns,
    const std::vector<ModelHandle>& models, const std::vector<VerificationPair>& pairs,
    const EvalSettings& settings) {
  require_calibrated(models);
  const int jobs = effective_jobs(models, settings.jobs);
  const std::vector<MatedScorer> scorers = make_scorers(models, pairs, jobs);
  std::vector<std::optional<PatternImage>> images{std::nullopt};
  for (const auto& [label, p] : patterns)
    images.emplace_back(rasterize(p, settings.canvas, settings.canvas, settings.softness));
  const std::size_t np = images.size();
  std::vector<double> med(models.size() * np);
  parallel_for(med.size(), jobs, [&](std::size_t cell) {
    const auto& img = images[cell % np];
    med[cell] = median(scorers[cell / np].similarities(img ? &*img : nullptr, &settings.blend));
  });
  std::vector<SimilaritySummaryRow> out;
  for (std::size_t k = 0; k < np; ++k)
    for (std::size_t m = 0; m < models.size(); ++m)
      out.push_back({k == 0 ? "none" : patterns[k - 1].first, models[m].name, med[m * np + k],
                     *models[m].threshold});
  return out;
}

std::string render_report(const ReportInputs& in) {
  if (!in.transfer && !in.baseline && !in.neighborhood && !in.external && in.similarity.empty())
    throw ContractError("report needs at least one result");
  auto rank = [&](const std::string& model) {
    const auto it = std::find(in.model_order.begin(), in.model_order.end(), model);
    return static_cast<std::size_t>(it - in.model_order.begin());
  };
  auto by_registry = [&](std::vector<std::string> names) {
    std::stable_sort(names.begin(), names.end(),
                     [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
    return names;
  };

  std::ostringstream os;
  os << "facecamo evaluation report\n";

  if (in.transfer) {
    const TransferMatrix& t = *in.transfer;
    os << "\n== Transferability (recognition rate; * = column minimum) ==\n";
    const std::vector<std::string> opt = by_registry(t.optimization_models);
    const std::vector<std::string> evals = by_registry(t.evaluation_models);
    std::set<std::pair<Family, Mode>> groups;
    for (const TransferCell& c : t.cells) groups.insert({c.family, c.mode});
    for (const auto& [family, mode] : groups) {
      os << "\n[" << to_string(mode) << " " << to_string(family) << "]\n";
      os << pad("optimized on", 16);
      for (const std::string& e : evals) os << pad(e, 12);
      os << "\n";
      for (const std::string& o : opt) {
        os << pad(o, 16);
        for (const std::string& e : evals) {
          const TransferCell* c = t.find(o, e, family, mode);
          std::string cell = c && c->accuracy ? format_fixed(*c->accuracy, 3) + (c->column_min ? "*" : "") : "-";
          os << pad(cell, 12);
        }
        os << "\n";
      }
    }
  }

  if (in.baseline) {
    const BaselineStats& b = *in.baseline;
    os << "\n== Random-pattern baseline (" << b.n_patterns << " patterns, " << b.n_identities
       << " identities, seed " << b.seed << ") ==\n";
    os << pad("model", 16) << pad("baseline", 10) << pad("mean", 10) << pad("std", 10) << pad("min", 10)
       << "max\n";
    std::vector<const BaselineRow*> rows;
    for (const BaselineRow& r : b.rows) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(),
                     [&](const BaselineRow* x, const BaselineRow* y) { return rank(x->model) < rank(y->model); });
    for (const BaselineRow* r : rows)
      os << pad(r->model, 16) << pad(format_fixed(r->baseline), 10) << pad(format_fixed(r->mean), 10)
         << pad(format_fixed(r->std), 10) << pad(format_fixed(r->min), 10) << format_fixed(r->max) << "\n";
  }

  if (in.neighborhood) {
    const NeighborhoodResult& n = *in.neighborhood;
    os << "\n== Neighborhood check (" << n.n_neighbors << " neighbors; dc=" << format_fixed(n.deltas.color, 2)
       << " dw=" << format_fixed(n.deltas.width_px, 2) << "px da=" << format_fixed(n.deltas.angle_deg, 2)
       << "deg) ==\n";
    os << "center: " << params_summary(n.center) << "\n";
    os << pad("model", 16) << pad("center", 10) << pad("|delta|", 10) << "std\n";
    std::vector<const NeighborhoodRow*> rows;
    for (const NeighborhoodRow& r : n.rows) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [&](const NeighborhoodRow* x, const NeighborhoodRow* y) {
      return rank(x->model) < rank(y->model);
    });
    for (const NeighborhoodRow* r : rows)
      os << pad(r->model, 16) << pad(format_fixed(r->center_accuracy), 10)
         << pad(format_fixed(r->mean_abs_delta), 10) << format_fixed(r->std) << "\n";
  }

  if (in.external) {
    const ExternalTable& t = *in.external;
    os << "\n== External images (mated comparisons; " << t.skipped << " records skipped) ==\n";
    os << pad("pattern", 14) << pad("stage", 11) << pad("attributes", 22) << pad("model", 16) << pad("n", 6)
       << pad("accuracy", 10) << "median_sim\n";
    std::vector<const ExternalRow*> rows;
    for (const ExternalRow& r : t.rows) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [&](const ExternalRow* x, const ExternalRow* y) {
      return std::tie(x->pattern_id, x->stage, x->attributes) < std::tie(y->pattern_id, y->stage, y->attributes) ||
             (std::tie(x->pattern_id, x->stage, x->attributes) == std::tie(y->pattern_id, y->stage, y->attributes) &&
              rank(x->model) < rank(y->model));
    });
    for (const ExternalRow* r : rows)
      os << pad(r->pattern_id, 14) << pad(r->stage, 11) << pad(r->attributes.empty() ? "-" : r->attributes, 22)
         << pad(r->model, 16) << pad(std::to_string(r->comparisons), 6) << pad(format_fixed(r->accuracy), 10)
         << format_fixed(r->median_similarity) << "\n";
  }

  if (!in.similarity.empty()) {
    os << "\n== Median mated similarity per pattern ==\n";
    os << pad("pattern", 24) << pad("model", 16) << pad("median", 10) << "threshold\n";
    std::vector<const SimilaritySummaryRow*> rows;
    for (const SimilaritySummaryRow& r : in.similarity) rows.push_back(&r);
    std::stable_sort(rows.begin(), rows.end(), [&](const SimilaritySummaryRow* x, const SimilaritySummaryRow* y) {
      return rank(x->model) < rank(y->model);
    });
    std::stable_sort(rows.begin(), rows.end(), [&](const SimilaritySummaryRow* x, const SimilaritySummaryRow* y) {
      if ((x->pattern == "none") != (y->pattern == "none")) return x->pattern == "none";
      return false;
    });
    for (const SimilaritySummaryRow* r : rows)
      os << pad(r->pattern, 24) << pad(r->model, 16) << pad(format_fixed(r->median), 10)
         << format_fixed(r->threshold) << "\n";
  }

  if (in.simulated_vs_generated) {
    const TTestResult& r = *in.simulated_vs_generated;
    os << "\nSimulated vs generated accuracy: mean difference " << format_fixed(r.mean_difference) << ", t="
       << format_fixed(r.t, 3) << ", df=" << format_fixed(r.df, 0) << ", p=" << format_fixed(r.p) << "\n";
  }

  os << "\nNotes: accuracies are recognition rates over mated pairs (patterned probe, clean gallery). "
        "Simulated-vs-generated comparisons use a paired two-sided t-test over per-pattern accuracies.\n";
  return os.str();
}

void write_baseline_table(const std::filesystem::path& path, const BaselineStats& s) {
  std::vector<std::vector<std::string>> rows;
  for (const BaselineRow& r : s.rows)
    rows.push_back({r.model, format_fixed(r.baseline, 6), format_fixed(r.mean, 6), format_fixed(r.std, 6),
                    format_fixed(r.min, 6), format_fixed(r.max, 6)});
  write_tsv(path, "facecamo.table.baseline/v1", {"model", "baseline", "mean", "std", "min", "max"}, rows);
}

void write_transfer_table(const std::filesystem::path& path, const TransferMatrix& m) {
  std::vector<std::vector<std::string>> rows;
  for (const TransferCell& c : m.cells)
    rows.push_back({std::string(to_string(c.family)), std::string(to_string(c.mode)), c.opt_model, c.eval_model,
                    c.accuracy ? format_fixed(*c.accuracy, 6) : "", c.column_min ? "1" : "0"});
  write_tsv(path, "facecamo.table.transfer/v1",
            {"family", "mode", "opt_model", "eval_model", "accuracy", "column_min"}, rows);
}

void write_neighborhood_table(const std::filesystem::path& path, const NeighborhoodResult& r) {
  std::vector<std::vector<std::string>> rows;
  for (const NeighborhoodRow& row : r.rows)
    rows.push_back({row.model, format_fixed(row.center_accuracy, 6), format_fixed(row.mean_abs_delta, 6),
                    format_fixed(row.std, 6)});
  write_tsv(path, "facecamo.table.neighborhood/v1", {"model", "center_accuracy", "mean_abs_delta", "std"}, rows);
}

void write_external_table(const std::filesystem::path& path, const ExternalTable& t) {
  std::vector<std::vector<std::string>> rows;
  for (const ExternalRow& r : t.rows)
    rows.push_back({r.pattern_id, r.stage, r.attributes, r.model, std::to_string(r.comparisons),
                    format_fixed(r.accuracy, 6), format_fixed(r.median_similarity, 6)});
  write_tsv(path, "facecamo.table.external/v1",
            {"pattern_id", "stage", "attributes", "model", "comparisons", "accuracy", "median_similarity"}, rows);
}

void write_similarity_table(const std::filesystem::path& path, const std::vector<SimilaritySummaryRow>& rows) {
  std::vector<std::vector<std::string>> out;
  for (const SimilaritySummaryRow& r : rows)
    out.push_back({r.pattern, r.model, format_fixed(r.median, 6), format_fixed(r.threshold, 6)});
  write_tsv(path, "facecamo.table.similarity/v1", {"pattern", "model", "median", "threshold"}, out);
}

}  // namespace facecamo
