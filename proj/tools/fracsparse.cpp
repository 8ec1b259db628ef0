// Command-line front end: sharpness experiments, bound checks, sparse
// domination on a function file, kernel condition certification, weight
// characteristics, the weak-type functional, and the sharp-maximal ratio.
//
// Exit codes: 0 = pass, 1 = verdict fail, 2 = usage or domain error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fracsparse/experiments.hpp"
#include "fracsparse/maximal.hpp"
#include "fracsparse/sparse.hpp"
#include "fracsparse/weights.hpp"

using namespace fracsparse;

namespace {

double parse_real(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  double num = std::stod(s.substr(0, slash));
  double den = std::stod(s.substr(slash + 1));
  if (den == 0.0) throw std::invalid_argument("zero denominator in " + s);
  return num / den;
}

double parse_rprime(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  return parse_real(s);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(parse_real(tok));
  return out;
}

DyadicFrame symmetric_frame(int depth) { return DyadicFrame(1, {Rat(-1)}, Rat(2), depth); }

GridFunction load_function(const std::string& path, int depth) {
  if (path.rfind("builtin:", 0) == 0) {
    int idx = std::stoi(path.substr(8));
    auto corpus = domination_corpus(symmetric_frame(depth), idx + 1, 0x5eedULL);
    return corpus.back();
  }
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open function file: " + path);
  return read_function(in);
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::invalid_argument("cannot open output file: " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for fractional sparse domination"};
  app.require_subcommand(1);
  app.set_config("--config", "", "plain key = value file mirroring the flags");

  // --- sharpness -----------------------------------------------------------
  auto* sharp = app.add_subcommand("sharpness", "power-weight sharpness experiment");
  int sh_example = 1, sh_n = 1, sh_depth = 12;
  std::string sh_alpha = "1/4", sh_r = "1", sh_p = "4/3";
  std::string sh_eps = "1/4,1/8,1/16,1/32,1/64,1/128,1/256";
  std::string sh_out;
  sharp->add_option("--example", sh_example, "extremal example (1 or 2)")->check(CLI::Range(1, 2));
  sharp->add_option("--n", sh_n, "dimension");
  sharp->add_option("--alpha", sh_alpha, "smoothing order");
  sharp->add_option("--r", sh_r, "local norm exponent");
  sharp->add_option("--p", sh_p, "source Lebesgue exponent");
  sharp->add_option("--eps-list", sh_eps, "comma-separated eps values");
  sharp->add_option("--depth", sh_depth, "frame depth");
  sharp->add_option("--out", sh_out, "CSV output path (default stdout)");

  // --- bound ----------------------------------------------------------------
  auto* bound = app.add_subcommand("bound", "normalized constant over a weight corpus");
  int bd_n = 1, bd_depth = 10;
  std::string bd_alpha = "1/4", bd_r = "1", bd_p = "4/3";
  double bd_budget = 8.0;
  bound->add_option("--n", bd_n, "dimension");
  bound->add_option("--alpha", bd_alpha, "smoothing order");
  bound->add_option("--r", bd_r, "local norm exponent");
  bound->add_option("--p", bd_p, "source Lebesgue exponent");
  bound->add_option("--depth", bd_depth, "frame depth");
  bound->add_option("--budget", bd_budget, "pass budget for ratio / t^sharp");

  // --- dominate ---------------------------------------------------------------
  auto* dom = app.add_subcommand("dominate", "build sparse families and check |T f| <= C A f");
  std::string do_kernel = "power:0.5:1", do_f, do_report;
  int do_depth = 10;
  std::string do_r = "1";
  dom->add_option("--kernel", do_kernel, "kernel spec");
  dom->add_option("--f", do_f, "function file (or builtin:<k>)")->required();
  dom->add_option("--depth", do_depth, "frame depth for builtin functions");
  dom->add_option("--r", do_r, "local norm exponent");
  dom->add_option("--report", do_report, "write the per-node family report here");

  // --- kernel-check -------------------------------------------------------------
  auto* kc = app.add_subcommand("kernel-check", "certify the size or Hormander condition");
  std::string kc_kernel = "power:0.5:1", kc_cond = "size", kc_rprime = "inf", kc_alpha;
  double kc_smin = 0.0625, kc_smax = 16.0, kc_x = 1.0, kc_R = 2.0, kc_tail = 1e-3;
  int kc_M = 20;
  kc->add_option("--kernel", kc_kernel, "kernel spec");
  kc->add_option("--condition", kc_cond, "size | hormander")
      ->check(CLI::IsMember({"size", "hormander"}));
  kc->add_option("--rprime", kc_rprime, "dual exponent (number or inf)");
  kc->add_option("--alpha", kc_alpha, "declared alpha (defaults to the kernel's)");
  kc->add_option("--smin", kc_smin, "smallest dyadic scale (size)");
  kc->add_option("--smax", kc_smax, "largest dyadic scale (size)");
  kc->add_option("--x", kc_x, "translation offset (hormander)");
  kc->add_option("--R", kc_R, "base radius, must exceed 2|x| (hormander)");
  kc->add_option("--M", kc_M, "number of annuli (hormander)");
  kc->add_option("--tail-tol", kc_tail, "extrapolated tail budget (hormander)");

  // --- apq -----------------------------------------------------------------------
  auto* apq = app.add_subcommand("apq", "A_{p,q} characteristic of a weight");
  std::string aq_weight = "power:0:1", aq_p = "2", aq_q = "2", aq_out;
  int aq_depth = 8;
  apq->add_option("--weight", aq_weight, "weight spec power:<a>:<coeff>");
  apq->add_option("--p", aq_p, "p exponent");
  apq->add_option("--q", aq_q, "q exponent");
  apq->add_option("--depth", aq_depth, "frame depth");
  apq->add_option("--out", aq_out, "per-cube CSV output path");

  // --- weak-type --------------------------------------------------------------------
  auto* wt = app.add_subcommand("weak-type", "weak (r, rn/(n-alpha r)) functional");
  std::string wt_kernel = "power:0.5:1", wt_f = "builtin:0", wt_weight = "power:0:1";
  int wt_n = 1, wt_depth = 8;
  std::string wt_alpha = "1/2", wt_r = "1", wt_p;
  wt->add_option("--kernel", wt_kernel, "kernel spec");
  wt->add_option("--f", wt_f, "function file (or builtin:<k>)");
  wt->add_option("--weight", wt_weight, "weight spec");
  wt->add_option("--n", wt_n, "dimension");
  wt->add_option("--alpha", wt_alpha, "smoothing order");
  wt->add_option("--r", wt_r, "weak-type exponent");
  wt->add_option("--p", wt_p, "tuple p (defaults between r and n/alpha)");
  wt->add_option("--depth", wt_depth, "frame depth for builtin functions");

  // --- kurtz ---------------------------------------------------------------------------
  auto* kz = app.add_subcommand("kurtz", "sup of M#(T f) / M_{alpha,r} f");
  std::string kz_kernel = "power:0.5:1", kz_f = "builtin:0";
  int kz_n = 1, kz_depth = 8;
  std::string kz_alpha = "1/2", kz_r = "1", kz_p;
  kz->add_option("--kernel", kz_kernel, "kernel spec");
  kz->add_option("--f", kz_f, "function file (or builtin:<k>), must be nonnegative");
  kz->add_option("--n", kz_n, "dimension");
  kz->add_option("--alpha", kz_alpha, "smoothing order");
  kz->add_option("--r", kz_r, "local norm exponent");
  kz->add_option("--p", kz_p, "tuple p (defaults between r and n/alpha)");
  kz->add_option("--depth", kz_depth, "frame depth for builtin functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sharp->parsed()) {
      auto tuple = ExponentTuple::make(sh_n, parse_real(sh_alpha), parse_real(sh_r),
                                       parse_real(sh_p));
      auto res = sharpness_run(sh_example, tuple, parse_list(sh_eps), symmetric_frame(sh_depth));
      std::ofstream file;
      write_sharpness_csv(open_out(file, sh_out), res);
      std::cerr << "example " << sh_example << ": slope=" << res.slope
                << " target=" << res.target << (res.pass ? " PASS" : " FAIL") << "\n";
      return res.pass ? 0 : 1;
    }
    if (bound->parsed()) {
      auto tuple = ExponentTuple::make(bd_n, parse_real(bd_alpha), parse_real(bd_r),
                                       parse_real(bd_p));
      DyadicFrame frame = symmetric_frame(bd_depth);
      std::vector<std::pair<Weight, GridFunction>> corpus;
      auto fs = domination_corpus(frame, 4, 0xb0bdULL, true);
      std::vector<Weight> weights{PowerWeight{0.0, 1.0}, PowerWeight{0.25, 1.0},
                                  PowerWeight{-0.25, 1.0}};
      for (const auto& w : weights)
        for (const auto& f : fs) corpus.emplace_back(w, f);
      auto res = bound_run(tuple, corpus, frame, bd_budget);
      for (const auto& row : res.rows)
        std::cout << row.label << " t=" << row.t << " ratio=" << row.ratio
                  << " normalized=" << row.normalized << "\n";
      std::cout << "max normalized=" << res.max_normalized << (res.pass ? " PASS" : " FAIL")
                << "\n";
      return res.pass ? 0 : 1;
    }
    if (dom->parsed()) {
      GridFunction f = load_function(do_f, do_depth);
      KernelSpec kspec = parse_kernel(do_kernel, f.frame().dim());
      DyadicCube root{0, 0, {}};
      auto built = build_sparse_family(kspec, f, root, parse_real(do_r));
      auto raw_check = verify_sparse(built.raw, Rat(1, 2));
      auto hosted_check = verify_sparse(built.hosted, built.hosted.eta);
      auto ratio = domination_ratio(kspec, f, split_by_tag(built.hosted), kspec.alpha,
                                    parse_real(do_r));
      if (!do_report.empty()) {
        std::ofstream rep(do_report);
        write_build_report(rep, built);
      }
      std::cout << "nodes=" << built.nodes.size() << " raw_sparse="
                << (raw_check.pass ? "pass" : "fail")
                << " hosted_sparse=" << (hosted_check.pass ? "pass" : "fail")
                << " C_inst=" << ratio.ratio << " violations=" << ratio.violations << "\n";
      bool pass = raw_check.pass && hosted_check.pass && ratio.violations == 0 &&
                  std::isfinite(ratio.ratio);
      return pass ? 0 : 1;
    }
    if (kc->parsed()) {
      KernelSpec kspec = parse_kernel(kc_kernel);
      double declared = kc_alpha.empty() ? kspec.alpha : parse_real(kc_alpha);
      ConditionReport rep;
      if (kc_cond == "size") {
        rep = size_constant(kspec, declared, parse_rprime(kc_rprime), kc_smin, kc_smax);
      } else {
        rep = hormander_sum(kspec, declared, parse_rprime(kc_rprime), {kc_x, 0.0, 0.0}, kc_R,
                            kc_M, kc_tail);
      }
      for (const auto& s : rep.samples)
        std::cout << rep.condition << ' ' << s.arg << ' ' << s.value << "\n";
      std::cout << rep.condition << " rprime=" << kc_rprime << ' ' << rep.message
                << (rep.pass ? " PASS" : " FAIL") << "\n";
      return rep.pass ? 0 : 1;
    }
    if (apq->parsed()) {
      DyadicFrame frame = symmetric_frame(aq_depth);
      auto rep = apq_char_report(parse_weight(aq_weight), parse_real(aq_p), parse_real(aq_q),
                                 frame, !aq_out.empty());
      if (!aq_out.empty()) {
        std::ofstream file(aq_out);
        write_char_csv(file, frame, rep);
      }
      std::cout << "apq=" << rep.value << "\n";
      return 0;
    }
    if (wt->parsed()) {
      GridFunction f = load_function(wt_f, wt_depth);
      KernelSpec kspec = parse_kernel(wt_kernel, f.frame().dim());
      double alpha = parse_real(wt_alpha), r = parse_real(wt_r);
      double p = wt_p.empty() ? 0.5 * (r + wt_n / alpha) : parse_real(wt_p);
      auto tuple = ExponentTuple::make(wt_n, alpha, r, p);
      double ratio = weak_type_ratio(kspec, f, parse_weight(wt_weight), tuple);
      std::cout << "weak-type ratio=" << ratio << "\n";
      return std::isfinite(ratio) ? 0 : 1;
    }
    if (kz->parsed()) {
      GridFunction f = load_function(kz_f, kz_depth);
      KernelSpec kspec = parse_kernel(kz_kernel, f.frame().dim());
      double alpha = parse_real(kz_alpha), r = parse_real(kz_r);
      double p = kz_p.empty() ? 0.5 * (r + kz_n / alpha) : parse_real(kz_p);
      auto tuple = ExponentTuple::make(kz_n, alpha, r, p);
      auto res = kurtz_check(kspec, f, tuple);
      std::cout << "kurtz ratio=" << res.ratio << " argmax_cell=" << res.argmax_cell << "\n";
      return std::isfinite(res.ratio) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
