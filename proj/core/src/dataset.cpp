#include "facecamo/dataset.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include "facecamo/errors.hpp"
#include "facecamo/io.hpp"
#include "facecamo/parallel.hpp"
#include "facecamo/rng.hpp"

namespace facecamo {

namespace {

Json detection_to_json(const Detection& d) {
  return Json{{"box", {d.left, d.top, d.right, d.bottom}},
              {"left_eye", {d.left_eye.x, d.left_eye.y}},
              {"right_eye", {d.right_eye.x, d.right_eye.y}}};
}

Detection detection_from_json(const Json& j) {
  Detection d;
  const Json& box = j.at("box");
  d.left = box.at(0);
  d.top = box.at(1);
  d.right = box.at(2);
  d.bottom = box.at(3);
  d.left_eye = {j.at("left_eye").at(0), j.at("left_eye").at(1)};
  d.right_eye = {j.at("right_eye").at(0), j.at("right_eye").at(1)};
  return d;
}

}  // namespace

std::vector<DatasetRecord> read_dataset_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("dataset manifest not found: " + path.string());
  std::vector<DatasetRecord> out;
  for (const Json& j : read_jsonl(path, kDatasetSchema)) {
    try {
      DatasetRecord r;
      r.image = j.at("image").get<std::string>();
      r.identity = j.at("identity").get<std::string>();
      if (j.contains("mask")) r.mask = j["mask"].get<std::string>();
      if (j.contains("labels")) r.labels = j["labels"].get<std::string>();
      if (j.contains("detection")) r.detection = detection_from_json(j["detection"]);
      r.split = j.value("split", std::string("eval"));
      if (r.split != "train" && r.split != "eval")
        throw DataError("unknown split '" + r.split + "'");
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ": malformed dataset record: " + e.what());
    }
  }
  return out;
}

void write_dataset_manifest(const std::filesystem::path& path,
                            const std::vector<DatasetRecord>& records) {
  std::vector<Json> lines;
  lines.reserve(records.size());
  for (const DatasetRecord& r : records) {
    Json j{{"image", r.image}, {"identity", r.identity}, {"split", r.split}};
    if (r.mask) j["mask"] = *r.mask;
    if (r.labels) j["labels"] = *r.labels;
    if (r.detection) j["detection"] = detection_to_json(*r.detection);
    lines.push_back(std::move(j));
  }
  write_jsonl(path, kDatasetSchema, lines);
}

std::vector<std::shared_ptr<const FaceSample>> FaceDataset::split(const std::string& name) const {
  std::vector<std::shared_ptr<const FaceSample>> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (splits[i] == name) out.push_back(samples[i]);
  return out;
}

std::vector<std::string> FaceDataset::identities(const std::string& split_name) const {
  std::vector<std::string> out;
  std::map<std::string, bool> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (splits[i] != split_name) continue;
    if (seen.emplace(samples[i]->identity, true).second) out.push_back(samples[i]->identity);
  }
  return out;
}

FaceDataset load_dataset(const std::filesystem::path& manifest, const PreprocessConfig& cfg,
                         const FaceDetector& detector, const FaceParser& parser, int jobs) {
  const std::vector<DatasetRecord> records = read_dataset_manifest(manifest);
  const std::filesystem::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::vector<std::shared_ptr<const FaceSample>> loaded(records.size());
  std::vector<std::string> failures(records.size());
  const int workers = detector.concurrency_safe() && parser.concurrency_safe() ? jobs : 1;
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const DatasetRecord& r = records[i];
    try {
      RawFace raw = load_raw_face(resolve(r.image));
      raw.fixture_detection = r.detection;
      if (r.labels) raw.label_map_path = resolve(*r.labels);
      if (r.mask) raw.mask_path = resolve(*r.mask);
      loaded[i] = std::make_shared<const FaceSample>(preprocess(raw, detector, parser, cfg, r.identity));
    } catch (const DetectionError& e) {
      failures[i] = e.what();
    } catch (const SegmentationError& e) {
      failures[i] = e.what();
    }
  });

  FaceDataset ds;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!loaded[i]) {
      std::cerr << "warning: skipping " << records[i].image << ": " << failures[i] << "\n";
      continue;
    }
    ds.samples.push_back(loaded[i]);
    ds.splits.push_back(records[i].split);
  }
  return ds;
}

FaceDataset load_dataset(const std::filesystem::path& manifest, const PreprocessConfig& cfg,
                         int jobs) {
  const FixtureDetector detector;
  const FixtureParser parser;
  return load_dataset(manifest, cfg, detector, parser, jobs);
}

std::vector<VerificationPair> verification_pairs(const FaceDataset& dataset, std::uint64_t seed) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::shared_ptr<const FaceSample>>> by_id;
  for (const auto& s : dataset.split("eval")) {
    auto& v = by_id[s->identity];
    if (v.empty()) order.push_back(s->identity);
    v.push_back(s);
  }
  std::vector<std::string> eligible;
  for (const auto& id : order)
    if (by_id[id].size() >= 2) eligible.push_back(id);

  std::vector<VerificationPair> pairs;
  for (const auto& id : eligible) pairs.push_back(make_pair(by_id[id][0], by_id[id][1]));
  if (eligible.size() >= 2) {
    Rng rng(derive_seed(seed, 0x9a1e));
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      std::size_t j = uniform_index(rng, eligible.size() - 1);
      if (j >= i) ++j;
      pairs.push_back(make_pair(by_id[eligible[i]][0], by_id[eligible[j]][1]));
    }
  }
  return pairs;
}

std::vector<VerificationPair> mated_pairs(const std::vector<VerificationPair>& pairs,
                                          const std::vector<std::string>& identities) {
  std::vector<VerificationPair> out;
  for (const auto& p : pairs) {
    if (!p.mated) continue;
    if (!identities.empty() &&
        std::find(identities.begin(), identities.end(), p.probe->identity) == identities.end())
      continue;
    out.push_back(p);
  }
  return out;
}

std::uint64_t pairs_digest(const std::vector<VerificationPair>& pairs) {
  // File names rather than full paths, so a relocated dataset keeps its digest.
  auto name = [](const FaceSample& s) { return std::filesystem::path(s.source_path).filename().string(); };
  std::uint64_t h = fnv1a("pairs");
  for (const auto& p : pairs) {
    const std::string key = p.probe->identity + "|" + name(*p.probe) + "|" + p.gallery->identity + "|" +
                            name(*p.gallery) + (p.mated ? "|m" : "|n") + "\n";
    h = fnv1a(key, h);
  }
  return h;
}

}  // namespace facecamo
