// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset; exits non-zero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles/metrics_oracle.hpp"
#include "../oracles/stats_reference.hpp"
#include "../support/cli_driver.hpp"
#include "bsup/gradient_check.hpp"
#include "bsup/histsim.hpp"
#include "bsup/metrics.hpp"
#include "bsup/models.hpp"
#include "bsup/stats.hpp"

using namespace bsup;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// ---------------------------------------------------------------------------

Outcome loss_table_consistency() {
  struct Row {
    const char* model;
    double combined, mae, ms_loss, ms_ssim;
  };
  const Row rows[] = {{"AE-BS", 0.0251, 0.0212, 0.0258, 0.9742},
                      {"ConvNet-BS", 0.0217, 0.0198, 0.0221, 0.9779},
                      {"RL-BS", 0.0211, 0.0219, 0.021, 0.979},
                      {"ResNet-BS", 0.0167, 0.014, 0.0172, 0.9828}};
  Outcome o;
  double worst = 0.0;
  for (const Row& r : rows) {
    const double err = std::abs(combine_loss_terms(r.ms_loss, r.mae) - r.combined);
    worst = std::max(worst, err);
    if (err >= 5e-4) {
      o.pass = false;
      o.detail += std::string(r.model) + " combined off by " + fmt("%.2e", err) + "; ";
    }
    if (std::abs((1.0 - r.ms_ssim) - r.ms_loss) >= 5e-5) {
      o.pass = false;
      o.detail += std::string(r.model) + " 1 - MS-SSIM disagrees; ";
    }
  }
  o.detail += "max combined-loss deviation " + fmt("%.2e", worst);
  return o;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  double worst_ssim = 0.0, worst_ms = 0.0;
  bool exact = true;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 64;
    std::vector<double> a = uniform(n * n, rng);
    // Half the pairs get smooth structure so every scale carries signal.
    if (t % 2 == 1)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
          a[y * n + x] = std::clamp(0.5 + 0.35 * std::sin(0.2 * x + 0.1 * t) * std::cos(0.15 * y) + 0.05 * (a[y * n + x] - 0.5), 0.0, 1.0);
    std::vector<double> b = a;
    const double eps = 0.02 + 0.2 * (t % 5) / 4.0;
    for (double& v : b) v = std::clamp(v + eps * nd(rng), 0.0, 1.0);
    const ImageView va{n, n, a}, vb{n, n, b};
    const metrics_oracle::Img oa{n, n, a}, ob{n, n, b};
    worst_ssim = std::max(worst_ssim, std::abs(ssim(va, vb) - metrics_oracle::ssim(oa, ob)));
    worst_ms = std::max(worst_ms, std::abs(ms_ssim(va, vb) - metrics_oracle::ms_ssim(oa, ob)));
    exact = exact && mae(va, vb) == metrics_oracle::mae(oa, ob) && mse(va, vb) == metrics_oracle::mse(oa, ob) &&
            psnr(va, vb) == metrics_oracle::psnr(oa, ob);
  }
  Outcome o;
  o.pass = worst_ssim < 1e-9 && worst_ms < 1e-9 && exact;
  o.detail = "50 pairs; max |SSIM diff| " + fmt("%.1e", worst_ssim) + ", max |MS-SSIM diff| " + fmt("%.1e", worst_ms) +
             ", MAE/MSE/PSNR " + (exact ? "exact" : "MISMATCH");
  return o;
}

Outcome gradient_soundness() {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
  auto note = [&](const GradientCheckReport& r, const std::string& what) {
    checked += r.entries_checked;
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      where = what + " " + r.worst_parameter;
    }
  };
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    std::mt19937_64 rng(1000 + s);
    // Loss gradient with respect to the predicted image.
    {
      const std::size_t n = 24;
      const auto target = uniform(n * n, rng, 0.1, 0.9);
      auto pred = target;
      std::normal_distribution<double> nd(0.0, 0.1);
      for (double& v : pred) v = std::clamp(v + nd(rng), 0.0, 1.0);
      std::vector<Parameter> ps = {{"pred", Tensor(Shape{1, 1, n, n}, pred, true), 0.0}};
      const Tensor t(Shape{1, 1, n, n}, target);
      GradientCheckOptions opt;
      opt.max_entries = 40;
      opt.seed = static_cast<unsigned long long>(s);
      note(gradient_check([&] { return combined_loss(ps[0].tensor, t); }, ps, opt), "combined loss");
    }
    // Every layer of every architecture.
    for (auto kind : {ModelKind::ae_bs, ModelKind::convnet_bs, ModelKind::rl_bs, ModelKind::resnet_bs}) {
      ModelSpec spec;
      spec.kind = kind;
      spec.width_scale = kind == ModelKind::rl_bs ? 0.125 : 0.0625;
      spec.num_blocks = 2;
      spec.l1_coeff = 1e-3;
      auto g = build_model(spec, static_cast<std::uint64_t>(s));
      for (auto& p : g.params)
        if (p.id.find("bias") != std::string::npos) {
          const auto v = uniform(p.tensor.size(), rng, -0.2, 0.2);
          std::copy(v.begin(), v.end(), p.tensor.mutable_data().begin());
        }
      const Tensor x(Shape{2, 1, 8, 8}, uniform(128, rng));
      const Tensor y(Shape{2, 1, 8, 8}, uniform(128, rng));
      GradientCheckOptions opt;
      opt.max_entries = 10;
      opt.fallback_steps = {1e-6, 3e-7};
      opt.seed = static_cast<unsigned long long>(s);
      note(gradient_check([&] { return residual_add(mse_loss(g.forward(x), y), l1_regularization(g.params)); },
                          g.params, opt),
           to_string(kind));
    }
  }
  Outcome o;
  o.pass = worst < 1e-4;
  o.detail = std::to_string(seeds) + " seeds, " + std::to_string(checked) + " entries; max relative error " +
             fmt("%.2e", worst) + " (" + where + ")";
  return o;
}

Outcome architecture_fidelity() {
  using Seq = std::vector<std::size_t>;
  Outcome o;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) {
      o.pass = false;
      o.detail += what + "; ";
    }
  };
  const auto ae = build_ae_bs(1.0), cn = build_convnet_bs(1.0), rl = build_rl_bs(1.0);
  const auto res = build_resnet_bs(16, 1.0);
  const auto aes = filter_sequence(ae);
  expect(Seq(aes.begin(), aes.begin() + 3) == Seq{16, 32, 64}, "AE-BS encoder filters");
  expect(filter_sequence(cn) == Seq{16, 32, 64, 128, 256, 512, 1}, "ConvNet-BS filters");
  expect(filter_sequence(rl) == Seq{8, 16, 32, 64, 128, 256, 512, 1}, "RL-BS filters");
  for (const auto* g : {&ae, &cn, &rl, &res}) {
    const auto r = validate_structure(*g);
    expect(r.valid, std::string(to_string(g->kind)) + " validator: " + (r.problems.empty() ? "" : r.problems.front()));
  }
  std::size_t blocks = 0;
  bool scales_ok = true, widths_ok = true, plain = true;
  for (const auto& l : res.layers) {
    if (l.type == LayerType::residual_block) {
      ++blocks;
      scales_ok = scales_ok && l.block_scale == 0.1;
      widths_ok = widths_ok && l.filters == 64;
    } else if (l.type == LayerType::conv) {
      widths_ok = widths_ok && (l.filters == 64 || &l == &res.layers[res.layers.size() - 2]);
    } else {
      plain = plain && l.type == LayerType::sigmoid;  // no normalisation or post-add activation layers
    }
  }
  expect(blocks == 16, "ResNet-BS block count " + std::to_string(blocks));
  expect(scales_ok, "ResNet-BS block scaling");
  expect(widths_ok, "ResNet-BS widths");
  expect(plain, "ResNet-BS extra layers");
  expect(res.layers.back().type == LayerType::sigmoid && filter_sequence(res).back() == 1, "ResNet-BS sigmoid head");
  if (o.pass) o.detail = "filter sequences exact; ResNet-BS: 16 blocks x 64 filters, scale 0.1, no BN, sigmoid head";
  return o;
}

Outcome training_efficacy() {
  using clock = std::chrono::steady_clock;
  const auto data = synth_generate(200, 64, 7);
  Outcome o;
  std::ostringstream d;

  {
    const auto t0 = clock::now();
    auto g = build_resnet_bs(4, 0.25, 7);
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.seed = 7;
    const auto r = train(g, data, cfg);
    const double gain = r.final_metrics.psnr - r.final_metrics.input_psnr;
    const double ratio = r.val_loss.back() / r.initial_val_loss;
    const double minutes = std::chrono::duration<double>(clock::now() - t0).count() / 60.0;
    o.pass = gain >= 3.0 && ratio <= 0.3;
    d << "ResNet-BS PSNR " << fmt("%.2f", r.final_metrics.psnr) << " vs input " << fmt("%.2f", r.final_metrics.input_psnr)
      << " dB (+" << fmt("%.2f", gain) << "), loss " << fmt("%.4f", r.val_loss.back()) << "/"
      << fmt("%.4f", r.initial_val_loss) << " = " << fmt("%.3f", ratio) << ", " << fmt("%.1f", minutes) << " min";
  }
  // The other three at a smaller desk scale: only a strict improvement is required.
  for (auto kind : {ModelKind::ae_bs, ModelKind::convnet_bs, ModelKind::rl_bs}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.width_scale = 0.125;
    auto g = build_model(spec, 7);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 7;
    const auto r = train(g, data, cfg);
    const bool better = r.final_metrics.psnr > r.final_metrics.input_psnr;
    o.pass = o.pass && better;
    d << "; " << to_string(kind) << " " << fmt("%.2f", r.final_metrics.psnr) << " vs " << fmt("%.2f", r.final_metrics.input_psnr);
  }
  o.detail = d.str();
  return o;
}

Outcome histogram_self_match() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int t = 0; t < 40; ++t) {
    const std::size_t w = 5 + rng() % 60, h = 5 + rng() % 60;
    auto px = uniform(w * h, rng);
    if (t % 10 == 0) std::fill(px.begin(), px.end(), 0.25 * (t / 10));  // flat images too
    const ImageView v{w, h, px};
    for (auto norm : {HistogramNormalization::counts, HistogramNormalization::unit_sum})
      for (std::size_t bins : {2u, 16u, 256u}) {
        const auto hist = build_histogram(v, bins, norm);
        const auto c = compare_histograms(hist, hist);
        worst = std::max({worst, std::abs(c.correlation - 1.0), std::abs(c.chi_square), std::abs(c.bhattacharyya),
                          std::abs(c.emd)});
      }
  }
  return {worst <= 1e-12, "240 self-comparisons; max deviation " + fmt("%.1e", worst)};
}

Outcome statistics_validation() {
  Outcome o;
  std::ostringstream d;
  const auto hand = anova_oneway({{"a", {1, 2, 3, 4}}, {"b", {3, 4, 5, 6}}});
  o.pass = std::abs(hand.statistic - 4.8) < 1e-12;
  d << "ANOVA hand F=" << fmt("%.6g", hand.statistic);
  double worst = 0.0;
  for (const auto& c : stats_reference::wilson) {
    const auto iv = wilson_interval(c.p_hat, c.n, c.conf);
    worst = std::max({worst, std::abs(iv.lo - c.lo), std::abs(iv.hi - c.hi)});
  }
  for (const auto& c : stats_reference::shapiro) {
    const auto r = shapiro_wilk(c.x);
    worst = std::max({worst, std::abs(r.statistic - c.w), std::abs(r.p_value - c.p)});
  }
  for (const auto& c : stats_reference::levene_mean) {
    const auto r = levene_test({{"a", c.a}, {"b", c.b}});
    worst = std::max({worst, std::abs(r.statistic - c.stat), std::abs(r.p_value - c.p)});
  }
  o.pass = o.pass && worst < 1e-3;
  d << "; max deviation from reference " << fmt("%.1e", worst);
  const auto cmp = compare_runs({"baseline", {0.70, 0.72, 0.69, 0.71}}, {"suppressed", {0.78, 0.80, 0.77, 0.80}});
  const bool df_ok = cmp.anova && *cmp.anova->df1 == 1.0 && *cmp.anova->df2 == 6.0;
  o.pass = o.pass && df_ok;
  d << "; 4-vs-4 df " << (df_ok ? "(1, 6)" : "WRONG");
  o.detail = d.str();
  return o;
}

Outcome reproducibility() {
  const auto root = std::filesystem::path(BSUP_TEST_TMP) / "acceptance_repro";
  Outcome o;
  std::size_t files = 0;
  for (bool via_binary : {true, false}) {
    const auto a = cli_driver::run_pipeline(root, via_binary);
    const auto b = cli_driver::run_pipeline(root, via_binary);
    for (const auto& f : a.failures) o.detail += "failed: " + f + "; ";
    if (!a.failures.empty() || !b.failures.empty() || a.files.size() != b.files.size() || a.stdout_log != b.stdout_log)
      o.pass = false;
    for (const auto& [name, bytes] : a.files) {
      const auto it = b.files.find(name);
      if (it == b.files.end() || it->second != bytes) {
        o.pass = false;
        o.detail += "differs: " + name + "; ";
      }
    }
    files = a.files.size();
  }
  o.detail += "7 commands x 2 runs (separate processes and in-process), " + std::to_string(files) + " artifacts compared";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"loss table arithmetic", loss_table_consistency},
      {"metric oracle equivalence", metric_oracles},
      {"gradient soundness", gradient_soundness},
      {"architecture fidelity", architecture_fidelity},
      {"desk-scale training efficacy", training_efficacy},
      {"histogram self-match", histogram_self_match},
      {"statistics validation", statistics_validation},
      {"CLI reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s  [%d] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
