#include "gcn/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gcn {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("short write to: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot move temporary file into place: " + path);
  }
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string iters_csv(const std::vector<IterRecord>& records) {
  std::ostringstream out;
  out << "# gcnlab iters schema v1\n";
  out << "iter,kl_exact,tv,z_est,eta_mc,grad_norm,weight_max,weight_ess\n";
  for (const IterRecord& r : records) {
    out << r.iter << ',' << format_double(r.kl_exact) << ',' << format_double(r.tv)
        << ',' << format_double(r.z_est) << ',' << format_double(r.eta_mc) << ','
        << format_double(r.grad_norm) << ',' << format_double(r.weight_max) << ','
        << format_double(r.weight_ess) << '\n';
  }
  return out.str();
}

std::string exact_dynamics_csv(const ExactDynamics& dynamics) {
  std::ostringstream out;
  out << "# gcnlab exact dynamics schema v1\n";
  out << "t,z_t,kl,delta_t,eta,bound,zhat_spread\n";
  for (std::size_t i = 0; i < dynamics.reports.size(); ++i) {
    const StepReport& r = dynamics.reports[i];
    out << r.t << ',' << format_double(r.z) << ',' << format_double(r.kl_after) << ','
        << format_double(r.delta) << ',' << format_double(r.eta) << ','
        << format_double(r.bound) << ',' << format_double(dynamics.zhat_spreads[i])
        << '\n';
  }
  return out.str();
}

std::string curves_csv(const std::vector<CurvePoint>& points) {
  std::ostringstream out;
  out << "# gcnlab curves schema v1; sentence BLEU, add-one smoothing for n>=2, "
         "order clipped to the shortest sequence\n";
  out << "temperature,neg_bleu,self_bleu\n";
  for (const CurvePoint& p : points) {
    out << format_double(p.temperature) << ',' << format_double(p.neg_bleu) << ','
        << format_double(p.self_bleu) << '\n';
  }
  return out.str();
}

}  // namespace gcn
