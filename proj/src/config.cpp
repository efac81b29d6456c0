#include "interlat/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "interlat/error.hpp"
#include "json.hpp"

namespace interlat {
namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Single description of the config surface so load/save/serialize can never
// drift apart.
template <typename Fn>
void for_each_field(TrainConfig& cfg, Fn&& fn) {
  fn("n", cfg.n);
  fn("m", cfg.m);
  fn("d", cfg.d);
  fn("b", cfg.b);
  fn("f", cfg.f);
  fn("h", cfg.h);
  fn("w", cfg.w);
  fn("d_face", cfg.d_face);
  fn("tau", cfg.tau);
  fn("alpha", cfg.alpha);
  fn("mask_combine", cfg.mask_combine);
  fn("attn_projections", cfg.attn_projections);
  fn("ortho_normalize", cfg.ortho_normalize);
  fn("lambda_hand", cfg.lambda_hand);
  fn("lambda_face", cfg.lambda_face);
  fn("beta", cfg.beta);
  fn("weighted_mean", cfg.weighted_mean);
  fn("T", cfg.T);
  fn("steps", cfg.steps);
  fn("lr", cfg.lr);
  fn("seed", cfg.seed);
  fn("init_scale", cfg.init_scale);
  fn("use_ris", cfg.use_ris);
  fn("use_quantize", cfg.use_quantize);
  fn("use_ortho", cfg.use_ortho);
  fn("use_id", cfg.use_id);
}

void assign_field(const json& value, const char* key, uint64_t& out) {
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<int64_t>() >= 0))
    fail(ErrorKind::ConfigInvalid, std::string("config key '") + key + "' must be a non-negative integer");
  out = value.get<uint64_t>();
}

void assign_field(const json& value, const char* key, double& out) {
  if (!value.is_number())
    fail(ErrorKind::ConfigInvalid, std::string("config key '") + key + "' must be a number");
  out = value.get<double>();
}

void assign_field(const json& value, const char* key, bool& out) {
  if (!value.is_boolean())
    fail(ErrorKind::ConfigInvalid, std::string("config key '") + key + "' must be a boolean");
  out = value.get<bool>();
}

void assign_field(const json& value, const char* key, std::string& out) {
  if (!value.is_string())
    fail(ErrorKind::ConfigInvalid, std::string("config key '") + key + "' must be a string");
  out = value.get<std::string>();
}

void append_value(std::ostringstream& os, uint64_t v) { os << v; }
void append_value(std::ostringstream& os, double v) { os << fmt_double(v); }
void append_value(std::ostringstream& os, bool v) { os << (v ? "true" : "false"); }
void append_value(std::ostringstream& os, const std::string& v) { os << v; }

}  // namespace

void validate_config(const TrainConfig& cfg) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) fail(ErrorKind::ConfigInvalid, msg);
  };
  require(cfg.n >= 1 && cfg.m >= 1, "latent counts n, m must be >= 1");
  require(cfg.d >= 1, "channel dim d must be >= 1");
  require(cfg.b >= 1, "batch size b must be >= 1");
  require(cfg.f >= 2, "frame count f must be >= 2");
  require(cfg.h >= 4 && cfg.w >= 4, "grid dims h, w must be >= 4");
  require(cfg.d_face >= 1, "identity dim d_face must be >= 1");
  require(cfg.tau > 0.0, "tau must be positive");
  require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, "alpha must lie in [0, 1]");
  require(cfg.mask_combine == "product" || cfg.mask_combine == "union",
          "mask_combine must be 'product' or 'union'");
  require(cfg.lambda_hand > 0.0 && cfg.lambda_face > 0.0, "region weights must be positive");
  require(cfg.beta >= 0.0, "beta must be non-negative");
  require(cfg.T >= 1, "diffusion steps T must be >= 1");
  require(cfg.steps >= 1, "train step budget must be >= 1");
  require(cfg.lr >= 0.0, "learning rate must be non-negative");
  require(cfg.init_scale >= 0.0, "init_scale must be non-negative");
  if (cfg.use_ortho && (cfg.n < 2 || cfg.m < 2))
    fail(ErrorKind::ConfigInvalid, "orthogonality penalty needs n >= 2 and m >= 2");
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::ConfigInvalid, "config root must be a JSON object");

  TrainConfig cfg;
  std::set<std::string> known;
  for_each_field(cfg, [&](const char* key, auto& field) {
    known.insert(key);
    auto it = doc.find(key);
    if (it != doc.end()) assign_field(*it, key, field);
  });
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key()))
      fail(ErrorKind::ConfigInvalid, "unknown config key '" + it.key() + "'");
  }
  validate_config(cfg);
  return cfg;
}

void save_config(const TrainConfig& cfg, const std::string& path) {
  json doc;
  for_each_field(const_cast<TrainConfig&>(cfg), [&](const char* key, auto& field) {
    doc[key] = field;
  });
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write config file: " + path);
  out << doc.dump(2) << "\n";
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::string canonical_config(const TrainConfig& cfg) {
  std::ostringstream os;
  bool first = true;
  for_each_field(const_cast<TrainConfig&>(cfg), [&](const char* key, auto& field) {
    if (!first) os << ";";
    first = false;
    os << key << "=";
    append_value(os, field);
  });
  return os.str();
}

uint64_t config_digest(const TrainConfig& cfg) {
  std::ostringstream os;
  bool first = true;
  for_each_field(const_cast<TrainConfig&>(cfg), [&](const char* key, auto& field) {
    if (std::string(key) == "steps") return;  // step budget never splits a run lineage
    if (!first) os << ";";
    first = false;
    os << key << "=";
    append_value(os, field);
  });
  const std::string text = os.str();
  uint64_t hash = 14695981039346656037ull;  // FNV-1a 64 offset basis
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ull;  // FNV prime
  }
  return hash;
}

std::string digest_hex(uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, digest);
  return buf;
}

}  // namespace interlat
