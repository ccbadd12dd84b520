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

#include "factvae/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "factvae/data.hpp"
#include "factvae/eval.hpp"
#include "factvae/model.hpp"
#include "factvae/textio.hpp"
#include "factvae/trainer.hpp"

namespace factvae::cli {

namespace {

struct GenbarsArgs {
  BarsConfig config;
  std::string out;
};

struct TrainArgs {
  TrainConfig config;
  long latent = 8;
  long hidden = 32;
  std::string data;
  std::string out;
  std::string history;
};

struct ReconstructArgs {
  std::string model;
  std::string data;
  std::string observe;
  std::string mode = "mean";
  std::uint64_t seed = 0;
  std::string out;
};

struct SparsityArgs {
  std::string model;
  std::string out;
};

struct EvalArgs {
  std::string model;
  std::string data;
  int iw_samples = 64;
  std::uint64_t seed = 0;
  std::string out;
};

int run_genbars(const GenbarsArgs& args) {
  const GroupedDataset dataset = generate_bars(args.config);
  write_dataset(dataset, args.out);
  std::cout << "wrote " << dataset.samples.size() << " samples to " << args.out
            << "\n";
  return 0;
}

int run_train(const TrainArgs& args) {
  const GroupedDataset dataset = read_dataset(args.data);
  FactVaeModel model(static_cast<Index>(args.latent),
                     static_cast<Index>(args.hidden), dataset.specs);
  SeededRng init_rng = SeededRng::derive(args.config.seed, 0);
  model.init_params(init_rng);
  const TrainHistory history = train(dataset, model, args.config);
  save_model(model, args.out);
  if (!args.history.empty()) write_history_csv(history, args.history);
  if (!history.epochs.empty()) {
    const EpochRecord& last = history.epochs.back();
    std::cout << "epoch " << last.epoch << " elbo_tilde "
              << format_double(last.mean_elbo, 10) << " penalty "
              << format_double(last.penalty, 10) << " zero_cols "
              << format_double(last.zero_col_fraction, 10) << "\n";
  }
  std::cout << "wrote model to " << args.out << "\n";
  return 0;
}

std::vector<Index> parse_observe(const FactVaeModel& model,
                                 const std::string& observe) {
  std::vector<Index> out;
  for (std::string_view name : split(observe, ',')) {
    const Index g = model.group_index(std::string(name));
    require(g >= 0, "unknown group '" + std::string(name) + "'");
    out.push_back(g);
  }
  require(!out.empty(), "--observe must name at least one group");
  return out;
}

int run_reconstruct(const ReconstructArgs& args) {
  require(args.mode == "mean" || args.mode == "sample",
          "--mode must be 'mean' or 'sample'");
  const FactVaeModel model = load_model(args.model);
  const GroupedDataset dataset = read_dataset(args.data);
  require(static_cast<Index>(dataset.specs.size()) == model.num_groups(),
          "dataset groups do not match the model");
  const std::vector<Index> observe = parse_observe(model, args.observe);
  const ReconMode mode =
      args.mode == "mean" ? ReconMode::kMean : ReconMode::kSample;

  SeededRng rng(args.seed);
  GroupedDataset output;
  output.specs = dataset.specs;
  for (const GroupedSample& sample : dataset.samples) {
    // Condition on whichever requested groups the sample actually has;
    // with none of them present the posterior is the prior.
    std::vector<Index> available;
    for (Index g : observe) {
      if (sample.has(g)) available.push_back(g);
    }
    std::vector<Vector> means;
    if (!available.empty()) {
      means = reconstruct(model, sample, available, mode, rng);
    } else {
      const DiagGaussian prior = poe_fuse({}, model.latent_dim());
      const Vector z = mode == ReconMode::kMean
                           ? prior.mean
                           : reparam_sample(prior, rng);
      for (Index g = 0; g < model.num_groups(); ++g) {
        means.push_back(decode_group(model, g, z).mean);
      }
    }
    GroupedSample rec;
    rec.present.assign(means.size(), 1);
    rec.values = std::move(means);
    output.samples.push_back(std::move(rec));
  }
  write_dataset(output, args.out);
  std::cout << "wrote " << output.samples.size() << " reconstructions to "
            << args.out << "\n";
  return 0;
}

int run_sparsity(const SparsityArgs& args) {
  const FactVaeModel model = load_model(args.model);
  write_sparsity_csv(sparsity_matrix(model), args.out);
  std::cout << "wrote sparsity matrix to " << args.out << "\n";
  return 0;
}

int run_eval(const EvalArgs& args) {
  const FactVaeModel model = load_model(args.model);
  const GroupedDataset dataset = read_dataset(args.data);
  require(static_cast<Index>(dataset.specs.size()) == model.num_groups(),
          "dataset groups do not match the model");
  SeededRng rng(args.seed);
  std::vector<double> values;
  values.reserve(dataset.samples.size());
  for (const GroupedSample& sample : dataset.samples) {
    values.push_back(heldout_ll(model, sample, args.iw_samples, rng));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::cout << "mean_heldout_ll " << format_double(mean, 10) << "\n";
  if (!args.out.empty()) {
    std::ofstream csv(args.out, std::ios::binary);
    if (!csv) throw FileError("cannot open '" + args.out + "' for writing");
    csv << "index,heldout_ll\n";
    for (size_t i = 0; i < values.size(); ++i) {
      csv << i << "," << format_double(values[i], 10) << "\n";
    }
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"factVAE: grouped variational autoencoder with "
               "product-of-experts inference and group-lasso sparsity"};
  app.require_subcommand(1);

  GenbarsArgs genbars;
  CLI::App* gen = app.add_subcommand(
      "genbars", "Generate the synthetic horizontal-bars dataset");
  gen->add_option("--n", genbars.config.n, "Number of images");
  gen->add_option("--size", genbars.config.size, "Image side (even, >= 4)");
  gen->add_option("--p-row", genbars.config.p_row,
                  "Row activation probability");
  gen->add_option("--noise-std", genbars.config.noise_std,
                  "Pixel noise standard deviation");
  gen->add_option("--p-miss", genbars.config.p_miss,
                  "Per-quadrant removal probability");
  gen->add_option("--seed", genbars.config.seed, "Random seed");
  gen->add_option("--out", genbars.out, "Output dataset path")->required();

  TrainArgs train_args;
  CLI::App* tr = app.add_subcommand("train", "Train a model on a dataset");
  tr->add_option("--data", train_args.data, "Input dataset path")->required();
  tr->add_option("--out", train_args.out, "Output model path")->required();
  tr->add_option("--latent", train_args.latent, "Latent dimension K");
  tr->add_option("--hidden", train_args.hidden, "Hidden width H");
  tr->add_option("--lambda", train_args.config.lambda, "Group-lasso weight");
  tr->add_option("--lr", train_args.config.learning_rate,
                 "Adam learning rate");
  tr->add_option("--eta", train_args.config.eta,
                 "Coupled-block gradient/prox step size");
  tr->add_option("--epochs", train_args.config.epochs, "Training epochs");
  tr->add_option("--batch", train_args.config.minibatch,
                 "Minibatch size (0 = pick from dataset size)");
  tr->add_option("--q-keep", train_args.config.q_keep,
                 "Group-dropout keep probability");
  tr->add_option("--mc-samples", train_args.config.mc_samples,
                 "Monte Carlo samples per objective evaluation");
  tr->add_option("--seed", train_args.config.seed, "Random seed");
  tr->add_option("--history", train_args.history,
                 "Optional per-epoch history CSV path");

  ReconstructArgs rec_args;
  CLI::App* rec = app.add_subcommand(
      "reconstruct", "Reconstruct all groups from an observed subset");
  rec->add_option("--model", rec_args.model, "Model path")->required();
  rec->add_option("--data", rec_args.data, "Dataset path")->required();
  rec->add_option("--observe", rec_args.observe,
                  "Comma-separated group names to condition on")
      ->required();
  rec->add_option("--mode", rec_args.mode, "mean | sample");
  rec->add_option("--seed", rec_args.seed, "Random seed (sample mode)");
  rec->add_option("--out", rec_args.out, "Output path")->required();

  SparsityArgs sp_args;
  CLI::App* sp = app.add_subcommand(
      "sparsity", "Export the group-by-latent sparsity matrix");
  sp->add_option("--model", sp_args.model, "Model path")->required();
  sp->add_option("--out", sp_args.out, "Output CSV path")->required();

  EvalArgs eval_args;
  CLI::App* ev = app.add_subcommand(
      "eval", "Importance-weighted heldout log-likelihood");
  ev->add_option("--model", eval_args.model, "Model path")->required();
  ev->add_option("--data", eval_args.data, "Dataset path")->required();
  ev->add_option("--iw-samples", eval_args.iw_samples,
                 "Importance samples per datapoint");
  ev->add_option("--seed", eval_args.seed, "Random seed");
  ev->add_option("--out", eval_args.out, "Optional per-sample CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_genbars(genbars);
    if (tr->parsed()) return run_train(train_args);
    if (rec->parsed()) return run_reconstruct(rec_args);
    if (sp->parsed()) return run_sparsity(sp_args);
    if (ev->parsed()) return run_eval(eval_args);
    std::cerr << "error: no subcommand given\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace factvae::cli
