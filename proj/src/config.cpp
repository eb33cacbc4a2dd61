#include "hdrfuse/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hdr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ContractError("config: " + key + " expects an integer");
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ContractError("config: " + key + " expects a number");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ContractError("config: " + key + " expects true/false");
}

}  // namespace

RunConfig parse_config(const std::string& text, RunConfig cfg) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ContractError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto& t = cfg.train;
    auto& l = cfg.loss;
    if (key == "patch_size") t.patch_size = to_size(key, val);
    else if (key == "patch_stride") t.patch_stride = to_size(key, val);
    else if (key == "batch_size") t.batch_size = to_size(key, val);
    else if (key == "lr0") t.lr0 = to_real(key, val);
    else if (key == "lr_decay") t.lr_decay = to_real(key, val);
    else if (key == "epochs") t.epochs = to_size(key, val);
    else if (key == "seed") t.seed = to_size(key, val);
    else if (key == "width_multiplier") t.width_multiplier = to_real(key, val);
    else if (key == "max_iterations") t.max_iterations = to_size(key, val);
    else if (key == "deterministic") t.deterministic = to_bool(key, val);
    else if (key == "gamma_kind") {
      auto k = parse_attribute(val);
      if (!k) throw ContractError("config: unknown gamma_kind " + val);
      l.gamma_kind = *k;
    } else if (key == "window_size") l.window.window_size = to_size(key, val);
    else if (key == "window_stride") l.window.stride = to_size(key, val);
    else if (key == "sigma_e") l.sigma_e = to_real(key, val);
    else if (key == "gamma_floor") l.gamma_floor = to_real(key, val);
    else throw ContractError("config: unknown key " + key);
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

}  // namespace hdr
