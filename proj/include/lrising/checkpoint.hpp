#pragma once

// Checkpoint format: one JSON header line
//   {"dim","side","s","J","kappa","h","beta","seed","sweep","boundary","exterior"}
// followed by N^d bytes in row-major order, 0x01 for +1 and 0xFF for -1.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrising/energy.hpp"
#include "lrising/errors.hpp"
#include "lrising/kernel.hpp"

namespace lrising {

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  long long sweep = 0;
  SpinConfig config{1, 3};
};

inline void write_checkpoint(std::ostream& out, const Checkpoint& cp) {
  nlohmann::ordered_json h;
  h["dim"] = cp.params.d;
  h["side"] = cp.config.side();
  h["s"] = cp.params.s;
  h["J"] = cp.params.J;
  h["kappa"] = cp.params.kappa;
  h["h"] = cp.params.h;
  h["beta"] = cp.params.beta;
  h["seed"] = cp.seed;
  h["sweep"] = cp.sweep;
  h["boundary"] = to_string(cp.config.boundary());
  h["exterior"] = to_string(cp.config.exterior());
  out << h.dump() << '\n';
  for (auto v : cp.config.spins()) out.put(static_cast<char>(v > 0 ? 0x01 : 0xFF));
  if (!out) throw Error("checkpoint write failed");
}

inline Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("checkpoint: missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad header: ") + e.what());
  }
  Checkpoint cp;
  try {
    cp.params.d = h.at("dim").get<int>();
    cp.params.s = h.at("s").get<double>();
    cp.params.J = h.at("J").get<double>();
    cp.params.kappa = h.at("kappa").get<double>();
    cp.params.h = h.at("h").get<double>();
    cp.params.beta = h.at("beta").get<double>();
    cp.seed = h.at("seed").get<std::uint64_t>();
    cp.sweep = h.at("sweep").get<long long>();
    const int side = h.at("side").get<int>();
    const std::string b = h.value("boundary", "torus");
    const std::string e = h.value("exterior", "free");
    const Boundary boundary = b == "torus" ? Boundary::torus : Boundary::fixed_exterior;
    if (b != "torus" && b != "fixed_exterior") throw ConfigError("checkpoint: unknown boundary " + b);
    Exterior ext = Exterior::free;
    if (e == "plus") ext = Exterior::plus;
    else if (e == "minus") ext = Exterior::minus;
    else if (e != "free") throw ConfigError("checkpoint: unknown exterior " + e);
    cp.config = SpinConfig(cp.params.d, side, boundary, ext);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad header field: ") + e.what());
  }
  std::vector<std::int8_t> spins(cp.config.size());
  for (auto& v : spins) {
    const int c = in.get();
    if (c == 0x01) v = 1;
    else if (c == 0xFF) v = -1;
    else throw ConfigError("checkpoint: bad or missing spin byte");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ConfigError("checkpoint: trailing bytes");
  cp.config.assign(spins);
  return cp;
}

}  // namespace lrising
