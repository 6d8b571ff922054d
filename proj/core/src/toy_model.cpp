#include "facecamo/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "facecamo/adam.hpp"
#include "facecamo/errors.hpp"
#include "facecamo/rng.hpp"

namespace facecamo {

struct ToyEmbeddingNet::Layout {
  int c0 = 3, s0 = 0;  // pooled input
  int c1 = 0, s1 = 0;  // conv1 output spatial == s0, pooled to s1
  int c2 = 0, s2 = 0;  // conv2 output spatial == s1, pooled to s2
  int feat = 0, dim = 0;
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, wf = 0, bf = 0, total = 0;
};

ToyEmbeddingNet::Layout ToyEmbeddingNet::layout() const {
  Layout l;
  l.s0 = profile_.canvas / arch_.input_pool;
  l.c1 = arch_.conv1_channels;
  l.s1 = l.s0 / 2;
  l.c2 = arch_.conv2_channels;
  l.s2 = l.s1 / 2;
  l.feat = l.c2 * l.s2 * l.s2;
  l.dim = arch_.embedding_dim;
  std::size_t off = 0;
  l.w1 = off; off += static_cast<std::size_t>(l.c1) * l.c0 * 9;
  l.b1 = off; off += l.c1;
  l.w2 = off; off += static_cast<std::size_t>(l.c2) * l.c1 * 9;
  l.b2 = off; off += l.c2;
  l.wf = off; off += static_cast<std::size_t>(l.dim) * l.feat;
  l.bf = off; off += l.dim;
  l.total = off;
  return l;
}

namespace {

constexpr char kMagic[8] = {'F', 'C', 'T', 'O', 'Y', '0', '0', '1'};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// 3x3 convolution, zero padding 1, stride 1. in: C x S x S, out: O x S x S.
void conv3x3_forward(const double* in, int c_in, int s, const double* w, const double* b, int c_out,
                     double* out) {
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  for (int o = 0; o < c_out; ++o) {
    double* op = out + o * plane;
    std::fill(op, op + plane, b[o]);
    for (int c = 0; c < c_in; ++c) {
      const double* ip = in + c * plane;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = w[((o * c_in + c) * 3 + ky) * 3 + kx];
          const int dy = ky - 1, dx = kx - 1;
          const int j0 = std::max(0, -dx), j1 = std::min(s, s - dx);
          for (int i = std::max(0, -dy); i < std::min(s, s - dy); ++i) {
            const double* irow = ip + (i + dy) * s + dx;
            double* orow = op + i * s;
            for (int j = j0; j < j1; ++j) orow[j] += wv * irow[j];
          }
        }
    }
  }
}

void conv3x3_backward(const double* in, const double* gout, int c_in, int s, const double* w,
                      int c_out, double* gw, double* gb, double* gin) {
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  for (int o = 0; o < c_out; ++o) {
    const double* gp = gout + o * plane;
    if (gb) gb[o] += std::accumulate(gp, gp + plane, 0.0);
    for (int c = 0; c < c_in; ++c) {
      const double* ip = in + c * plane;
      double* gip = gin ? gin + c * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const std::size_t widx = ((o * c_in + c) * 3 + ky) * 3 + kx;
          const double wv = w[widx];
          const int dy = ky - 1, dx = kx - 1;
          const int j0 = std::max(0, -dx), j1 = std::min(s, s - dx);
          double acc = 0.0;
          for (int i = std::max(0, -dy); i < std::min(s, s - dy); ++i) {
            const double* irow = ip + (i + dy) * s + dx;
            const double* grow = gp + i * s;
            if (gw)
              for (int j = j0; j < j1; ++j) acc += grow[j] * irow[j];
            if (gip) {
              double* girow = gip + (i + dy) * s + dx;
              for (int j = j0; j < j1; ++j) girow[j] += wv * grow[j];
            }
          }
          if (gw) gw[widx] += acc;
        }
    }
  }
}

void avgpool2_forward(const double* in, int c, int s, double* out) {
  const int h = s / 2;
  for (int k = 0; k < c; ++k)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j) {
        const double* p = in + (static_cast<std::size_t>(k) * s + 2 * i) * s + 2 * j;
        out[(static_cast<std::size_t>(k) * h + i) * h + j] = 0.25 * (p[0] + p[1] + p[s] + p[s + 1]);
      }
}

void avgpool2_backward(const double* gout, int c, int s, double* gin) {
  const int h = s / 2;
  for (int k = 0; k < c; ++k)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < h; ++j) {
        const double g = 0.25 * gout[(static_cast<std::size_t>(k) * h + i) * h + j];
        double* p = gin + (static_cast<std::size_t>(k) * s + 2 * i) * s + 2 * j;
        p[0] = g;
        p[1] = g;
        p[s] = g;
        p[s + 1] = g;
      }
}

void silu_forward(const std::vector<double>& z, std::vector<double>& a) {
  a.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] * sigmoid(z[i]);
}

void silu_backward(const std::vector<double>& z, std::vector<double>& g) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double sg = sigmoid(z[i]);
    g[i] *= sg * (1.0 + z[i] * (1.0 - sg));
  }
}

}  // namespace

ToyEmbeddingNet::ToyEmbeddingNet(const ToyArchitecture& arch, const PreprocessingProfile& profile,
                                 std::uint64_t init_seed)
    : arch_(arch), profile_(profile) {
  if (arch.input_pool < 1 || profile.canvas % (arch.input_pool * 4) != 0)
    throw ConfigError("toy model: canvas must be divisible by 4 * input_pool");
  if (arch.embedding_dim < 2 || arch.conv1_channels < 1 || arch.conv2_channels < 1)
    throw ConfigError("toy model: invalid architecture");
  const Layout l = layout();
  params_.assign(l.total, 0.0);
  Rng rng(init_seed);
  auto he = [&](std::size_t off, std::size_t count, int fan_in) {
    const double sd = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < count; ++i) params_[off + i] = sd * standard_normal(rng);
  };
  he(l.w1, l.b1 - l.w1, l.c0 * 9);
  he(l.w2, l.b2 - l.w2, l.c1 * 9);
  he(l.wf, l.bf - l.wf, l.feat);
}

void ToyEmbeddingNet::check_input(const Image& image) const {
  if (image.channels() != 3 || image.height() != profile_.canvas || image.width() != profile_.canvas)
    throw ContractError("toy model: input does not match the preprocessing profile");
}

Embedding ToyEmbeddingNet::forward(const Image& image, Activations& acts) const {
  check_input(image);
  const Layout l = layout();
  const int p = arch_.input_pool;
  const double inv_area = 1.0 / (p * p);

  acts.pooled_input.assign(static_cast<std::size_t>(l.c0) * l.s0 * l.s0, 0.0);
  for (int y = 0; y < profile_.canvas; ++y)
    for (int x = 0; x < profile_.canvas; ++x)
      for (int c = 0; c < 3; ++c)
        acts.pooled_input[(static_cast<std::size_t>(c) * l.s0 + y / p) * l.s0 + x / p] +=
            (image.at(y, x, c) - profile_.mean[c]) / profile_.stddev[c] * inv_area;

  acts.z1.assign(static_cast<std::size_t>(l.c1) * l.s0 * l.s0, 0.0);
  conv3x3_forward(acts.pooled_input.data(), l.c0, l.s0, &params_[l.w1], &params_[l.b1], l.c1,
                  acts.z1.data());
  silu_forward(acts.z1, acts.a1);
  acts.p1.assign(static_cast<std::size_t>(l.c1) * l.s1 * l.s1, 0.0);
  avgpool2_forward(acts.a1.data(), l.c1, l.s0, acts.p1.data());

  acts.z2.assign(static_cast<std::size_t>(l.c2) * l.s1 * l.s1, 0.0);
  conv3x3_forward(acts.p1.data(), l.c1, l.s1, &params_[l.w2], &params_[l.b2], l.c2, acts.z2.data());
  silu_forward(acts.z2, acts.a2);
  acts.p2.assign(static_cast<std::size_t>(l.feat), 0.0);
  avgpool2_forward(acts.a2.data(), l.c2, l.s1, acts.p2.data());

  acts.features.assign(l.dim, 0.0);
  for (int d = 0; d < l.dim; ++d) {
    const double* row = &params_[l.wf + static_cast<std::size_t>(d) * l.feat];
    double acc = params_[l.bf + d];
    for (int f = 0; f < l.feat; ++f) acc += row[f] * acts.p2[f];
    acts.features[d] = acc;
  }
  double nrm = 0.0;
  for (double v : acts.features) nrm += v * v;
  acts.norm = std::sqrt(nrm);
  if (acts.norm == 0.0) throw ModelError("toy model produced a zero embedding");
  acts.output.resize(l.dim);
  for (int d = 0; d < l.dim; ++d) acts.output[d] = acts.features[d] / acts.norm;
  return acts.output;
}

Image ToyEmbeddingNet::backward(const Activations& acts, std::span<const double> upstream,
                                std::vector<double>* param_grad, bool want_input_grad) const {
  const Layout l = layout();
  if (static_cast<int>(upstream.size()) != l.dim) throw ContractError("toy model: bad upstream size");
  if (param_grad && param_grad->size() != l.total) throw ContractError("toy model: bad gradient buffer");

  // Through the L2 normalization.
  double dot = 0.0;
  for (int d = 0; d < l.dim; ++d) dot += acts.output[d] * upstream[d];
  std::vector<double> gfeat(l.dim);
  for (int d = 0; d < l.dim; ++d) gfeat[d] = (upstream[d] - acts.output[d] * dot) / acts.norm;

  std::vector<double> gp2(l.feat, 0.0);
  for (int d = 0; d < l.dim; ++d) {
    const double g = gfeat[d];
    const double* row = &params_[l.wf + static_cast<std::size_t>(d) * l.feat];
    for (int f = 0; f < l.feat; ++f) gp2[f] += g * row[f];
    if (param_grad) {
      double* grow = &(*param_grad)[l.wf + static_cast<std::size_t>(d) * l.feat];
      for (int f = 0; f < l.feat; ++f) grow[f] += g * acts.p2[f];
      (*param_grad)[l.bf + d] += g;
    }
  }

  std::vector<double> ga2(acts.a2.size());
  avgpool2_backward(gp2.data(), l.c2, l.s1, ga2.data());
  silu_backward(acts.z2, ga2);
  std::vector<double> gp1(acts.p1.size(), 0.0);
  conv3x3_backward(acts.p1.data(), ga2.data(), l.c1, l.s1, &params_[l.w2], l.c2,
                   param_grad ? &(*param_grad)[l.w2] : nullptr,
                   param_grad ? &(*param_grad)[l.b2] : nullptr, gp1.data());

  std::vector<double> ga1(acts.a1.size());
  avgpool2_backward(gp1.data(), l.c1, l.s0, ga1.data());
  silu_backward(acts.z1, ga1);
  std::vector<double> gp0(want_input_grad ? acts.pooled_input.size() : 0, 0.0);
  conv3x3_backward(acts.pooled_input.data(), ga1.data(), l.c0, l.s0, &params_[l.w1], l.c1,
                   param_grad ? &(*param_grad)[l.w1] : nullptr,
                   param_grad ? &(*param_grad)[l.b1] : nullptr,
                   want_input_grad ? gp0.data() : nullptr);

  if (!want_input_grad) return {};
  const int p = arch_.input_pool;
  const double inv_area = 1.0 / (p * p);
  Image gin(profile_.canvas, profile_.canvas, 3);
  for (int y = 0; y < profile_.canvas; ++y)
    for (int x = 0; x < profile_.canvas; ++x)
      for (int c = 0; c < 3; ++c)
        gin.at(y, x, c) = gp0[(static_cast<std::size_t>(c) * l.s0 + y / p) * l.s0 + x / p] *
                          inv_area / profile_.stddev[c];
  return gin;
}

Embedding ToyEmbeddingNet::embed(const Image& image) const {
  Activations acts;
  return forward(image, acts);
}

Image ToyEmbeddingNet::embed_backward(const Image& image, std::span<const double> upstream) const {
  Activations acts;
  forward(image, acts);
  return backward(acts, upstream, nullptr, true);
}

std::pair<Embedding, Image> ToyEmbeddingNet::embed_with_gradient(const Image& image,
                                                                 std::span<const double> upstream) const {
  Activations acts;
  Embedding e = forward(image, acts);
  return {std::move(e), backward(acts, upstream, nullptr, true)};
}

std::uint64_t ToyEmbeddingNet::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(params_.data());
  for (std::size_t i = 0; i < params_.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ToyEmbeddingNet::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write weights: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::int32_t ints[] = {profile_.canvas, arch_.input_pool, arch_.conv1_channels,
                               arch_.conv2_channels, arch_.embedding_dim};
  out.write(reinterpret_cast<const char*>(ints), sizeof(ints));
  out.write(reinterpret_cast<const char*>(profile_.mean.data()), sizeof(double) * 3);
  out.write(reinterpret_cast<const char*>(profile_.stddev.data()), sizeof(double) * 3);
  const std::uint64_t count = params_.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(sizeof(double) * params_.size()));
  if (!out) throw DataError("failed writing weights: " + path.string());
}

ToyEmbeddingNet ToyEmbeddingNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open toy weights: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ModelError("not a toy weights file: " + path.string());
  std::int32_t ints[5];
  in.read(reinterpret_cast<char*>(ints), sizeof(ints));
  PreprocessingProfile prof;
  prof.canvas = ints[0];
  in.read(reinterpret_cast<char*>(prof.mean.data()), sizeof(double) * 3);
  in.read(reinterpret_cast<char*>(prof.stddev.data()), sizeof(double) * 3);
  ToyArchitecture arch{ints[1], ints[2], ints[3], ints[4]};
  ToyEmbeddingNet net(arch, prof, 0);
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || count != net.params_.size()) throw ModelError("toy weights size mismatch: " + path.string());
  in.read(reinterpret_cast<char*>(net.params_.data()),
          static_cast<std::streamsize>(sizeof(double) * count));
  if (!in) throw ModelError("truncated toy weights: " + path.string());
  return net;
}

namespace {

// Shift by whole pixels with edge clamping, scale brightness.
Image jitter(const Image& src, int dx, int dy, double gain) {
  Image out(src.height(), src.width(), src.channels());
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x) {
      const int sy = std::clamp(y - dy, 0, src.height() - 1);
      const int sx = std::clamp(x - dx, 0, src.width() - 1);
      for (int c = 0; c < src.channels(); ++c)
        out.at(y, x, c) = std::clamp(src.at(sy, sx, c) * gain, 0.0, 1.0);
    }
  return out;
}

}  // namespace

double verification_accuracy(const ModelHandle& model, const std::vector<VerificationPair>& pairs) {
  if (!model.threshold) throw ContractError("model '" + model.name + "' is not calibrated");
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const VerificationPair& p : pairs) {
    const double s = cosine_similarity(embed(model, p.probe->image), embed(model, p.gallery->image));
    if ((s >= *model.threshold) == p.mated) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ToyTrainingResult train_toy_model(const FaceDataset& dataset, const ToyTrainOptions& opt,
                                  const std::string& name) {
  const auto train = dataset.split("train");
  std::vector<std::string> ids = dataset.identities("train");
  std::map<std::string, int> class_of;
  std::vector<int> per_class(ids.size(), 0);
  for (std::size_t i = 0; i < ids.size(); ++i) class_of[ids[i]] = static_cast<int>(i);
  for (const auto& s : train) ++per_class[class_of[s->identity]];
  const auto eligible = std::count_if(per_class.begin(), per_class.end(), [](int n) { return n >= 2; });
  if (eligible < 20)
    throw DataError("toy training needs >= 20 identities with >= 2 training images (found " +
                    std::to_string(eligible) + ")");
  if (opt.batch_size < 1) throw ConfigError("batch size must be positive");

  auto net = std::make_shared<ToyEmbeddingNet>(opt.arch, opt.profile, derive_seed(opt.seed, 1));
  const int dim = opt.arch.embedding_dim;
  const std::size_t n_net = net->parameter_count();
  const std::size_t n_cls = ids.size() * dim;

  Rng rng(derive_seed(opt.seed, 2));
  std::vector<double> class_w(n_cls);
  for (double& v : class_w) v = standard_normal(rng);

  std::vector<double> all_params(n_net + n_cls);
  Adam adam(all_params.size());
  ToyTrainingResult result;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int steps_per_epoch = static_cast<int>((train.size() + opt.batch_size - 1) / opt.batch_size);
  const int total_steps = opt.epochs * steps_per_epoch;
  int step = 0;
  ToyEmbeddingNet::Activations acts;
  std::vector<double> grad(n_net + n_cls);
  std::vector<double> net_grad(n_net);

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t bi = start; bi < end; ++bi) {
        const FaceSample& sample = *train[order[bi]];
        const int label = class_of[sample.identity];
        Image img = sample.image;
        if (uniform(rng, 0.0, 1.0) < opt.pattern_augment_prob) {
          PatternParams pp = sample_random_params(
              rng, uniform(rng, 0.0, 1.0) < 0.5 ? Family::kStripes : Family::kChevrons,
              Mode::kUnconstrained);
          pp.phase = uniform(rng, 0.0, 1.0);
          const PatternImage pat = rasterize(pp, img.height(), img.width());
          BlendConfig bc{uniform(rng, 0.3, 0.5), false};
          img = blend(sample, pat, bc);
        }
        const int dx = static_cast<int>(uniform_index(rng, 5)) - 2;
        const int dy = static_cast<int>(uniform_index(rng, 5)) - 2;
        img = jitter(img, dx, dy, uniform(rng, 0.85, 1.15));

        const Embedding y = net->forward(img, acts);
        // Additive-margin softmax over unit-normalized class weights.
        std::vector<double> cosines(ids.size()), norms(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
          const double* wk = &class_w[k * dim];
          double nn = 0.0, dot = 0.0;
          for (int d = 0; d < dim; ++d) {
            nn += wk[d] * wk[d];
            dot += wk[d] * y[d];
          }
          norms[k] = std::sqrt(nn);
          cosines[k] = dot / norms[k];
        }
        std::vector<double> logits(ids.size());
        double mx = -INFINITY;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          logits[k] = opt.scale * (cosines[k] - (static_cast<int>(k) == label ? opt.margin : 0.0));
          mx = std::max(mx, logits[k]);
        }
        double z = 0.0;
        for (double& v : logits) z += (v = std::exp(v - mx));
        epoch_loss += -std::log(logits[label] / z);

        std::vector<double> gy(dim, 0.0);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          const double gcos =
              opt.scale * (logits[k] / z - (static_cast<int>(k) == label ? 1.0 : 0.0));
          if (gcos == 0.0) continue;
          const double* wk = &class_w[k * dim];
          double* gk = &grad[n_net + k * dim];
          for (int d = 0; d < dim; ++d) {
            const double wn = wk[d] / norms[k];
            gy[d] += gcos * wn;
            // d cos / d w_k = (y - cos * w_hat) / |w_k|
            gk[d] += gcos * (y[d] - cosines[k] * wn) / norms[k];
          }
        }
        std::fill(net_grad.begin(), net_grad.end(), 0.0);
        net->backward(acts, gy, &net_grad, false);
        for (std::size_t i = 0; i < n_net; ++i) grad[i] += net_grad[i];
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (double& g : grad) g *= inv;
      std::copy(net->parameters().begin(), net->parameters().end(), all_params.begin());
      std::copy(class_w.begin(), class_w.end(), all_params.begin() + n_net);
      adam.step(all_params, grad, lr_schedule(step, total_steps, opt.learning_rate, 0.05 * opt.learning_rate));
      std::copy(all_params.begin(), all_params.begin() + n_net, net->parameters().begin());
      std::copy(all_params.begin() + n_net, all_params.end(), class_w.begin());
      ++step;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
  }

  result.handle.name = name;
  result.handle.model = net;
  const auto pairs = verification_pairs(dataset, opt.seed);
  calibrate_threshold(result.handle, pairs);
  result.heldout_accuracy = verification_accuracy(result.handle, pairs);
  result.heldout_mated_rate = *result.handle.baseline;
  return result;
}

}  // namespace facecamo
