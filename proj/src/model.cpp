// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "factvae/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "factvae/textio.hpp"

namespace factvae {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

Vector as_vec(const Matrix& column_matrix) { return column_matrix.col(0); }

void fill_normal(Matrix& m, double stddev, SeededRng& rng) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      m(i, j) = stddev * rng.normal();
    }
  }
}

void check_subset_contract(const FactVaeModel& model,
                           const GroupedSample& sample,
                           std::span<const Index> infer,
                           std::span<const Index> observed) {
  require(!infer.empty(), "elbo: inference subset must be nonempty");
  for (Index g : observed) {
    require(g >= 0 && g < model.num_groups(), "elbo: group index out of range");
    require(sample.has(g), "elbo: observed group missing from sample");
  }
  for (Index g : infer) {
    require(std::find(observed.begin(), observed.end(), g) != observed.end(),
            "elbo: inference subset must be contained in the observed set");
  }
}

}  // namespace

const Vector& GroupedSample::value(Index g) const {
  if (!has(g)) {
    throw std::invalid_argument("GroupedSample: group " + std::to_string(g) +
                                " is missing");
  }
  return values[static_cast<size_t>(g)];
}

std::vector<Index> GroupedSample::observed() const {
  std::vector<Index> out;
  for (size_t g = 0; g < present.size(); ++g) {
    if (present[g]) out.push_back(static_cast<Index>(g));
  }
  return out;
}

GroupNetworks::GroupNetworks(Index latent_dim, Index hidden_dim,
                             Index group_dim)
    : enc_w(hidden_dim, group_dim),
      enc_b(hidden_dim, 1),
      mean_w(latent_dim, hidden_dim),
      mean_b(latent_dim, 1),
      prec_w(latent_dim, hidden_dim),
      latent_w(group_dim, latent_dim),
      dec_w(hidden_dim, group_dim),
      dec_b(hidden_dim, 1),
      out_w(group_dim, hidden_dim),
      out_b(group_dim, 1),
      obs_logvar(group_dim, 1) {}

FactVaeModel::FactVaeModel(Index latent_dim, Index hidden_dim,
                           std::vector<GroupSpec> groups)
    : latent_dim_(latent_dim), hidden_dim_(hidden_dim),
      groups_(std::move(groups)) {
  require(latent_dim_ >= 1 && hidden_dim_ >= 1,
          "FactVaeModel: latent and hidden dimensions must be positive");
  require(!groups_.empty(), "FactVaeModel: at least one group required");
  std::set<std::string> names;
  for (const GroupSpec& spec : groups_) {
    require(spec.dim >= 1, "FactVaeModel: group dims must be >= 1");
    require(names.insert(spec.name).second,
            "FactVaeModel: duplicate group name '" + spec.name + "'");
    nets_.emplace_back(latent_dim_, hidden_dim_, spec.dim);
  }
}

void FactVaeModel::init_params(SeededRng& rng) {
  for (size_t g = 0; g < nets_.size(); ++g) {
    GroupNetworks& n = nets_[g];
    const double p = static_cast<double>(groups_[g].dim);
    const double h = static_cast<double>(hidden_dim_);
    fill_normal(n.enc_w.value, 1.0 / std::sqrt(p), rng);
    fill_normal(n.mean_w.value, 1.0 / std::sqrt(h), rng);
    fill_normal(n.prec_w.value, 0.1, rng);
    fill_normal(n.latent_w.value, 0.1, rng);
    fill_normal(n.dec_w.value, 1.0 / std::sqrt(p), rng);
    fill_normal(n.out_w.value, 1.0 / std::sqrt(h), rng);
    n.enc_b.value.setZero();
    n.mean_b.value.setZero();
    n.dec_b.value.setZero();
    n.out_b.value.setZero();
    // Start with a confident observation model; with wide initial noise the
    // likelihood gradients are too weak for the latent path to ever form.
    n.obs_logvar.value.setConstant(-4.0);
  }
}

Index FactVaeModel::group_index(const std::string& name) const {
  for (size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name == name) return static_cast<Index>(g);
  }
  return -1;
}

DiagGaussian encode_group(const FactVaeModel& model, Index g,
                          const Vector& x) {
  require(g >= 0 && g < model.num_groups(), "encode_group: bad group index");
  const GroupNetworks& n = model.nets(g);
  require(x.size() == model.group(g).dim,
          "encode_group: input length does not match group dim");
  const Vector body =
      ((n.enc_w.value * x + as_vec(n.enc_b.value)).array().tanh()).matrix();
  DiagGaussian expert;
  expert.mean = n.mean_w.value * body + as_vec(n.mean_b.value);
  expert.precision = (n.prec_w.value * body).cwiseAbs();
  return expert;
}

DiagGaussian encode(const FactVaeModel& model, const GroupedSample& sample,
                    std::span<const Index> infer) {
  require(!infer.empty(), "encode: inference subset must be nonempty");
  std::vector<DiagGaussian> experts;
  experts.reserve(infer.size());
  for (Index g : infer) {
    experts.push_back(encode_group(model, g, sample.value(g)));
  }
  return poe_fuse(experts, model.latent_dim());
}

ObsDistribution decode_group(const FactVaeModel& model, Index g,
                             const Vector& z) {
  require(g >= 0 && g < model.num_groups(), "decode_group: bad group index");
  require(z.size() == model.latent_dim(),
          "decode_group: latent length does not match model");
  const GroupNetworks& n = model.nets(g);
  const Vector bottleneck = n.latent_w.value * z;
  const Vector hidden =
      ((n.dec_w.value * bottleneck + as_vec(n.dec_b.value)).array().tanh())
          .matrix();
  ObsDistribution out;
  out.mean = n.out_w.value * hidden + as_vec(n.out_b.value);
  out.variance = n.obs_logvar.value.col(0).array().exp();
  return out;
}

namespace {

GroupVars bind_one(ad::Tape& tape, GroupNetworks& n) {
  GroupVars v;
  v.enc_w = tape.param(n.enc_w);
  v.enc_b = tape.param(n.enc_b);
  v.mean_w = tape.param(n.mean_w);
  v.mean_b = tape.param(n.mean_b);
  v.prec_w = tape.param(n.prec_w);
  v.latent_w = tape.param(n.latent_w);
  v.dec_w = tape.param(n.dec_w);
  v.dec_b = tape.param(n.dec_b);
  v.out_w = tape.param(n.out_w);
  v.out_b = tape.param(n.out_b);
  v.obs_logvar = tape.param(n.obs_logvar);
  return v;
}

GroupVars bind_one_const(ad::Tape& tape, const GroupNetworks& n) {
  GroupVars v;
  v.enc_w = tape.constant(n.enc_w.value);
  v.enc_b = tape.constant(n.enc_b.value);
  v.mean_w = tape.constant(n.mean_w.value);
  v.mean_b = tape.constant(n.mean_b.value);
  v.prec_w = tape.constant(n.prec_w.value);
  v.latent_w = tape.constant(n.latent_w.value);
  v.dec_w = tape.constant(n.dec_w.value);
  v.dec_b = tape.constant(n.dec_b.value);
  v.out_w = tape.constant(n.out_w.value);
  v.out_b = tape.constant(n.out_b.value);
  v.obs_logvar = tape.constant(n.obs_logvar.value);
  return v;
}

}  // namespace

std::vector<GroupVars> bind_parameters(ad::Tape& tape, FactVaeModel& model) {
  std::vector<GroupVars> vars;
  vars.reserve(static_cast<size_t>(model.num_groups()));
  for (Index g = 0; g < model.num_groups(); ++g) {
    vars.push_back(bind_one(tape, model.nets(g)));
  }
  return vars;
}

std::vector<GroupVars> bind_snapshot(ad::Tape& tape,
                                     const FactVaeModel& model) {
  std::vector<GroupVars> vars;
  vars.reserve(static_cast<size_t>(model.num_groups()));
  for (Index g = 0; g < model.num_groups(); ++g) {
    vars.push_back(bind_one_const(tape, model.nets(g)));
  }
  return vars;
}

ad::Var elbo_sample_node(ad::Tape& tape, const std::vector<GroupVars>& vars,
                         const FactVaeModel& model,
                         const GroupedSample& sample,
                         std::span<const Index> infer,
                         std::span<const Index> observed, SeededRng& rng,
                         int mc_samples) {
  check_subset_contract(model, sample, infer, observed);
  require(mc_samples >= 1, "elbo: mc_samples must be >= 1");
  const Index latent = model.latent_dim();

  std::vector<ad::Var> x_const(static_cast<size_t>(model.num_groups()));
  for (Index g : observed) {
    x_const[static_cast<size_t>(g)] = tape.constant(sample.value(g));
  }

  // Experts over the inference subset.
  ad::Var lam_total, weighted_total;
  bool first = true;
  for (Index g : infer) {
    const GroupVars& v = vars[static_cast<size_t>(g)];
    ad::Var body = ad::tanh(
        ad::add(ad::matvec(v.enc_w, x_const[static_cast<size_t>(g)]),
                v.enc_b));
    ad::Var mu_g = ad::add(ad::matvec(v.mean_w, body), v.mean_b);
    ad::Var lam_g = ad::abs(ad::matvec(v.prec_w, body));
    ad::Var weighted_g = ad::cmul(lam_g, mu_g);
    if (first) {
      lam_total = lam_g;
      weighted_total = weighted_g;
      first = false;
    } else {
      lam_total = ad::add(lam_total, lam_g);
      weighted_total = ad::add(weighted_total, weighted_g);
    }
  }

  // Fusion with the standard-normal prior (precision 1, mean 0).
  ad::Var ones = tape.constant(Vector::Ones(latent));
  ad::Var lam = ad::offset(lam_total, 1.0);
  ad::Var mu = ad::cdiv(weighted_total, lam);
  ad::Var variance = ad::cdiv(ones, lam);
  ad::Var sigma = ad::sqrt(variance);

  // KL(q || N(0, I)) = 1/2 sum (var + mu^2 - 1 + ln lam).
  ad::Var kl = ad::scale(
      ad::sum(ad::sub(ad::add(ad::add(variance, ad::square(mu)), ad::log(lam)),
                      ones)),
      0.5);

  // Monte Carlo reconstruction over all observed groups.
  ad::Var recon_total;
  bool recon_first = true;
  for (int s = 0; s < mc_samples; ++s) {
    ad::Var eps = tape.constant(rng.normal_vector(latent));
    ad::Var z = ad::add(mu, ad::cmul(sigma, eps));
    for (Index g : observed) {
      const GroupVars& v = vars[static_cast<size_t>(g)];
      ad::Var bottleneck = ad::matvec(v.latent_w, z);
      ad::Var hidden =
          ad::tanh(ad::add(ad::matvec(v.dec_w, bottleneck), v.dec_b));
      ad::Var mean = ad::add(ad::matvec(v.out_w, hidden), v.out_b);
      ad::Var resid = ad::sub(x_const[static_cast<size_t>(g)], mean);
      ad::Var weighted_sq =
          ad::cmul(ad::square(resid), ad::exp(ad::scale(v.obs_logvar, -1.0)));
      ad::Var core = ad::sum(ad::add(weighted_sq, v.obs_logvar));
      const double dim = static_cast<double>(model.group(g).dim);
      ad::Var ll_g = ad::scale(ad::offset(core, dim * kLogTwoPi), -0.5);
      recon_total = recon_first ? ll_g : ad::add(recon_total, ll_g);
      recon_first = false;
    }
  }
  ad::Var recon = ad::scale(recon_total, 1.0 / mc_samples);
  return ad::sub(recon, kl);
}

ad::Var log_theta_prior_node(const std::vector<GroupVars>& vars) {
  ad::Var total;
  bool first = true;
  for (const GroupVars& v : vars) {
    for (const ad::Var* w :
         {&v.enc_w, &v.enc_b, &v.mean_w, &v.mean_b, &v.dec_w, &v.dec_b,
          &v.out_w, &v.out_b}) {
      ad::Var s = ad::sum(ad::square(*w));
      total = first ? s : ad::add(total, s);
      first = false;
    }
  }
  return ad::scale(total, -0.5);
}

double elbo_tilde(const FactVaeModel& model, const GroupedSample& sample,
                  std::span<const Index> infer,
                  std::span<const Index> observed, SeededRng& rng,
                  int mc_samples) {
  ad::Tape tape;
  const std::vector<GroupVars> vars = bind_snapshot(tape, model);
  ad::Var core = elbo_sample_node(tape, vars, model, sample, infer, observed,
                                  rng, mc_samples);
  ad::Var value = ad::add(core, log_theta_prior_node(vars));
  return value.value()(0, 0);
}

// ---- serialization --------------------------------------------------------

namespace {

constexpr const char* kModelMagic = "FACTVAE1";

struct BlockRef {
  const char* name;
  const Matrix* m;
};

std::vector<BlockRef> block_layout(const GroupNetworks& n) {
  return {
      {"enc_w", &n.enc_w.value},         {"enc_b", &n.enc_b.value},
      {"mean_w", &n.mean_w.value},       {"mean_b", &n.mean_b.value},
      {"prec_w", &n.prec_w.value},       {"latent_w", &n.latent_w.value},
      {"dec_w", &n.dec_w.value},         {"dec_b", &n.dec_b.value},
      {"out_w", &n.out_w.value},         {"out_b", &n.out_b.value},
      {"obs_logvar", &n.obs_logvar.value},
  };
}

std::vector<std::pair<const char*, Matrix*>> block_layout_mut(
    GroupNetworks& n) {
  return {
      {"enc_w", &n.enc_w.value},         {"enc_b", &n.enc_b.value},
      {"mean_w", &n.mean_w.value},       {"mean_b", &n.mean_b.value},
      {"prec_w", &n.prec_w.value},       {"latent_w", &n.latent_w.value},
      {"dec_w", &n.dec_w.value},         {"dec_b", &n.dec_b.value},
      {"out_w", &n.out_w.value},         {"out_b", &n.out_b.value},
      {"obs_logvar", &n.obs_logvar.value},
  };
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& out) {
    if (!std::getline(in_, out)) return false;
    if (!out.empty() && out.back() == '\r') out.pop_back();
    ++line_;
    return true;
  }

  std::string expect(const std::string& what) {
    std::string s;
    if (!next(s)) {
      throw ParseError("line " + std::to_string(line_ + 1) +
                       ": unexpected end of file, expected " + what);
    }
    return s;
  }

  long line() const { return line_; }

 private:
  std::istream& in_;
  long line_ = 0;
};

}  // namespace

void save_model(const FactVaeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot open '" + path + "' for writing");
  out << kModelMagic << "\n";
  out << "K " << model.latent_dim() << "\n";
  out << "H " << model.hidden_dim() << "\n";
  out << "groups " << model.num_groups() << "\n";
  for (const GroupSpec& spec : model.groups()) {
    out << "group " << spec.name << " " << spec.dim << "\n";
  }
  for (Index g = 0; g < model.num_groups(); ++g) {
    for (const BlockRef& block : block_layout(model.nets(g))) {
      const Matrix& m = *block.m;
      out << "block " << g << " " << block.name << " " << m.rows() << " "
          << m.cols() << "\n";
      for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
          if (j > 0) out << " ";
          out << format_double(m(i, j), 17);
        }
        out << "\n";
      }
    }
  }
  if (!out) throw FileError("failed writing model to '" + path + "'");
}

FactVaeModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open model file '" + path + "'");
  LineReader reader(in);

  if (reader.expect("header") != kModelMagic) {
    throw ParseError("line 1: not a FACTVAE1 model file: '" + path + "'");
  }
  auto parse_kv = [&](const std::string& key) -> long {
    std::istringstream ss(reader.expect(key));
    std::string k;
    long v = 0;
    if (!(ss >> k >> v) || k != key) {
      throw ParseError("line " + std::to_string(reader.line()) +
                       ": expected '" + key + " <value>'");
    }
    return v;
  };
  const long latent = parse_kv("K");
  const long hidden = parse_kv("H");
  const long num_groups = parse_kv("groups");
  if (latent < 1 || hidden < 1 || num_groups < 1) {
    throw ParseError("line " + std::to_string(reader.line()) +
                     ": bad model dimensions");
  }
  std::vector<GroupSpec> specs;
  for (long g = 0; g < num_groups; ++g) {
    std::istringstream ss(reader.expect("group spec"));
    std::string k, name;
    long dim = 0;
    if (!(ss >> k >> name >> dim) || k != "group" || dim < 1) {
      throw ParseError("line " + std::to_string(reader.line()) +
                       ": expected 'group <name> <dim>'");
    }
    specs.push_back(GroupSpec{name, static_cast<Index>(dim)});
  }

  FactVaeModel model(static_cast<Index>(latent), static_cast<Index>(hidden),
                     std::move(specs));
  for (Index g = 0; g < model.num_groups(); ++g) {
    for (auto& [name, matrix] : block_layout_mut(model.nets(g))) {
      std::istringstream ss(reader.expect("block header"));
      std::string k, block_name;
      long gi = -1, rows = 0, cols = 0;
      if (!(ss >> k >> gi >> block_name >> rows >> cols) || k != "block" ||
          gi != g || block_name != name) {
        throw ParseError("line " + std::to_string(reader.line()) +
                         ": expected 'block " + std::to_string(g) + " " +
                         name + " <rows> <cols>'");
      }
      if (rows != matrix->rows() || cols != matrix->cols()) {
        throw ParseError("line " + std::to_string(reader.line()) + ": block " +
                         name + " has shape " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", expected " +
                         std::to_string(matrix->rows()) + "x" +
                         std::to_string(matrix->cols()));
      }
      for (Index i = 0; i < matrix->rows(); ++i) {
        const std::string row_line = reader.expect("matrix row");
        const auto tokens = split(row_line, ' ');
        if (static_cast<Index>(tokens.size()) != matrix->cols()) {
          throw ParseError("line " + std::to_string(reader.line()) +
                           ": expected " + std::to_string(matrix->cols()) +
                           " values in block " + name);
        }
        for (Index j = 0; j < matrix->cols(); ++j) {
          (*matrix)(i, j) = parse_double_token(tokens[static_cast<size_t>(j)],
                                               reader.line());
        }
      }
    }
  }
  // Keep the stored log-variances inside their documented range.
  for (Index g = 0; g < model.num_groups(); ++g) {
    auto& lv = model.nets(g).obs_logvar.value;
    lv = lv.cwiseMax(kObsLogVarMin).cwiseMin(kObsLogVarMax);
  }
  return model;
}

}  // namespace factvae
