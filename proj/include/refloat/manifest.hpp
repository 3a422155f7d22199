#pragma once
//
// Run manifest: everything that determines a CLI run, serialized next to the
// outputs so a run can be reproduced byte for byte.
//

#include <string>

#include <json.hpp>

#include "refloat/cost.hpp"
#include "refloat/format.hpp"

namespace refloat {

struct RunManifest {
  std::string command;  // convert | solve | cost | study
  std::string matrix_path;
  ReFloatConfig format;
  HardwareConfig hardware;
  std::string method = "cg";
  std::string backend = "exact";
  double tolerance = 1e-8;
  std::uint64_t max_iterations = 100000;
  std::string rhs_mode = "ones-solution";
  std::uint64_t seed = 0;
  int threads = 1;
  std::uint32_t parallel_width = 0;  // 0: derive from the hardware config
  int exp_bits_lo = 11, exp_bits_hi = 11;
  int frac_bits_lo = 52, frac_bits_hi = 52;
  std::string out_dir = "refloat_out";
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["matrix"] = m.matrix_path;
  j["format"] = {{"block_bits", m.format.block_bits},
                 {"mat_exp", m.format.mat_exp},
                 {"mat_frac", m.format.mat_frac},
                 {"vec_exp", m.format.vec_exp},
                 {"vec_frac", m.format.vec_frac}};
  j["hardware"] = {{"crossbar_dim", m.hardware.crossbar_dim},
                   {"total_compute_bits", m.hardware.total_compute_bits},
                   {"cell_bits", m.hardware.cell_bits},
                   {"write_latency_ns", m.hardware.write_latency_ns},
                   {"block_compute_latency_ns", m.hardware.block_compute_latency_ns}};
  j["solver"] = {{"method", m.method},
                 {"backend", m.backend},
                 {"tolerance", m.tolerance},
                 {"max_iterations", m.max_iterations}};
  j["rhs"] = {{"mode", m.rhs_mode}, {"seed", m.seed}};
  j["threads"] = m.threads;
  j["parallel_width"] = m.parallel_width;
  j["study"] = {{"exp_bits_lo", m.exp_bits_lo},
                {"exp_bits_hi", m.exp_bits_hi},
                {"frac_bits_lo", m.frac_bits_lo},
                {"frac_bits_hi", m.frac_bits_hi}};
  j["out"] = m.out_dir;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.matrix_path = j.at("matrix").get<std::string>();
  const auto& f = j.at("format");
  m.format.block_bits = f.at("block_bits").get<int>();
  m.format.mat_exp = f.at("mat_exp").get<int>();
  m.format.mat_frac = f.at("mat_frac").get<int>();
  m.format.vec_exp = f.at("vec_exp").get<int>();
  m.format.vec_frac = f.at("vec_frac").get<int>();
  const auto& h = j.at("hardware");
  m.hardware.crossbar_dim = h.at("crossbar_dim").get<std::uint32_t>();
  m.hardware.total_compute_bits = h.at("total_compute_bits").get<std::uint64_t>();
  m.hardware.cell_bits = h.at("cell_bits").get<std::uint32_t>();
  m.hardware.write_latency_ns = h.at("write_latency_ns").get<double>();
  m.hardware.block_compute_latency_ns =
      h.at("block_compute_latency_ns").get<double>();
  const auto& s = j.at("solver");
  m.method = s.at("method").get<std::string>();
  m.backend = s.at("backend").get<std::string>();
  m.tolerance = s.at("tolerance").get<double>();
  m.max_iterations = s.at("max_iterations").get<std::uint64_t>();
  m.rhs_mode = j.at("rhs").at("mode").get<std::string>();
  m.seed = j.at("rhs").at("seed").get<std::uint64_t>();
  m.threads = j.at("threads").get<int>();
  m.parallel_width = j.at("parallel_width").get<std::uint32_t>();
  const auto& st = j.at("study");
  m.exp_bits_lo = st.at("exp_bits_lo").get<int>();
  m.exp_bits_hi = st.at("exp_bits_hi").get<int>();
  m.frac_bits_lo = st.at("frac_bits_lo").get<int>();
  m.frac_bits_hi = st.at("frac_bits_hi").get<int>();
  m.out_dir = j.at("out").get<std::string>();
  return m;
}

}  // namespace refloat
