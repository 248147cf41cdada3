#include "splitstep/brownian.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <limits>

#include "splitstep/error.hpp"

namespace splitstep {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double to_open_unit(std::uint64_t x) { return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52; }

double normal_quantile(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

std::array<double, 2> counter_uniforms(std::uint64_t seed, std::uint32_t stream, std::uint64_t a, std::uint32_t b,
                                       std::uint32_t block) {
  const std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b,
                                            (stream << 16) | (block & 0xFFFFu)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto r = philox4x32(ctr, key);
  const std::uint64_t x0 = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
  const std::uint64_t x1 = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
  return {to_open_unit(x0), to_open_unit(x1)};
}

BrownianLattice::BrownianLattice(std::uint64_t seed, std::size_t particles, std::size_t noise_dim, double h_fine,
                                 std::size_t fine_steps)
    : seed_(seed), n_(particles), l_(noise_dim), h_fine_(h_fine), sqrt_h_(std::sqrt(h_fine)), m_fine_(fine_steps) {
  if (particles == 0 || noise_dim == 0) throw SizeMismatch("lattice needs N >= 1 and l >= 1");
  if (!(h_fine > 0.0) || !std::isfinite(h_fine)) throw NonCommensurate("fine stepsize must be positive");
  if (particles > std::numeric_limits<std::uint32_t>::max()) throw SizeMismatch("too many particles");
  if (noise_dim > 2 * 0xFFFFu) throw SizeMismatch("noise dimension too large");
}

double BrownianLattice::fine_increment(std::size_t i, std::size_t k, std::size_t c) const {
  if (cache_) return (*cache_)[(k * n_ + i) * l_ + c];
  const auto u = counter_uniforms(seed_, static_cast<std::uint32_t>(Stream::brownian), k,
                                  static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(c / 2));
  return sqrt_h_ * normal_quantile(u[c % 2]);
}

std::size_t BrownianLattice::ratio(double h) const {
  if (!(h > 0.0) || !std::isfinite(h)) throw NonCommensurate("stepsize must be positive");
  const double q = h / h_fine_;
  const double r = std::round(q);
  if (r < 1.0 || std::fabs(q - r) > std::nextafter(r, INFINITY) - r)
    throw NonCommensurate("stepsize " + std::to_string(h) + " is not a multiple of the fine stepsize " +
                          std::to_string(h_fine_));
  return static_cast<std::size_t>(r);
}

void BrownianLattice::coarse_increment(std::size_t i, std::size_t n, double h, std::span<double> out) const {
  if (out.size() != l_) throw SizeMismatch("increment buffer must hold l values");
  if (i >= n_) throw SizeMismatch("particle index out of range");
  const std::size_t r = ratio(h);
  if ((n + 1) * r > m_fine_) throw SizeMismatch("coarse step beyond the lattice horizon");
  for (std::size_t c = 0; c < l_; ++c) {
    double acc = 0.0;
    for (std::size_t k = n * r; k < (n + 1) * r; ++k) acc += fine_increment(i, k, c);
    out[c] = acc;
  }
}

void BrownianLattice::coarse_increments(std::size_t n, std::size_t r, std::span<double> out) const {
  if (out.size() != n_ * l_) throw SizeMismatch("increment buffer must hold N x l values");
  if (r == 0 || (n + 1) * r > m_fine_) throw SizeMismatch("coarse step beyond the lattice horizon");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = n * r; k < (n + 1) * r; ++k) {
    if (cache_) {
      const double* src = cache_->data() + k * n_ * l_;
      for (std::size_t e = 0; e < n_ * l_; ++e) out[e] += src[e];
    } else {
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t c = 0; c < l_; ++c) out[i * l_ + c] += fine_increment(i, k, c);
    }
  }
}

BrownianLattice BrownianLattice::extend_particles(std::size_t new_particles) const {
  if (new_particles < n_) throw ShrinkNotAllowed("cannot shrink a lattice from " + std::to_string(n_) + " to " +
                                                 std::to_string(new_particles) + " particles");
  return BrownianLattice(seed_, new_particles, l_, h_fine_, m_fine_);
}

void BrownianLattice::materialize() {
  if (cache_) return;
  auto buf = std::make_shared<std::vector<double>>(m_fine_ * n_ * l_);
  std::size_t e = 0;
  for (std::size_t k = 0; k < m_fine_; ++k)
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t c = 0; c < l_; ++c) (*buf)[e++] = fine_increment(i, k, c);
  cache_ = std::move(buf);
}

double InitialLaw::sample(double u, double z) const {
  switch (kind) {
    case Kind::normal: return a + std::sqrt(b) * z;
    case Kind::uniform: return a + (b - a) * u;
    case Kind::binomial: return u < b ? 0.0 : a;
    case Kind::point: return a;
  }
  return a;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return s;
}

InitialLaw parse_law(const std::string& text) {
  auto open = text.find('('), close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ConfigInvalid("x0", "expected name(args) in '" + text + "'");
  std::string name = text.substr(0, open);
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();
  while (!name.empty() && std::isspace(static_cast<unsigned char>(name.front()))) name.erase(name.begin());
  std::vector<double> args;
  std::string body = text.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    while (end && *end && std::isspace(static_cast<unsigned char>(*end))) ++end;
    if (end == item.c_str() || (end && *end)) throw ConfigInvalid("x0", "bad number '" + item + "' in '" + text + "'");
    args.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  InitialLaw law;
  auto need = [&](std::size_t k) {
    if (args.size() != k) throw ConfigInvalid("x0", name + " takes " + std::to_string(k) + " arguments");
  };
  if (name == "normal") {
    need(2);
    if (!(args[1] >= 0.0)) throw ConfigInvalid("x0", "normal variance must be >= 0");
    law = {InitialLaw::Kind::normal, args[0], args[1]};
  } else if (name == "uniform") {
    need(2);
    if (!(args[1] > args[0])) throw ConfigInvalid("x0", "uniform needs a < b");
    law = {InitialLaw::Kind::uniform, args[0], args[1]};
  } else if (name == "binomial") {
    need(2);
    if (!(args[1] >= 0.0 && args[1] <= 1.0)) throw ConfigInvalid("x0", "binomial p must lie in [0,1]");
    law = {InitialLaw::Kind::binomial, args[0], args[1]};
  } else if (name == "point") {
    need(1);
    law = {InitialLaw::Kind::point, args[0], 0.0};
  } else {
    throw ConfigInvalid("x0", "unknown law '" + name + "'");
  }
  return law;
}

}  // namespace

std::string InitialLaw::to_string() const {
  switch (kind) {
    case Kind::normal: return "normal(" + num(a) + "," + num(b) + ")";
    case Kind::uniform: return "uniform(" + num(a) + "," + num(b) + ")";
    case Kind::binomial: return "binomial(" + num(a) + "," + num(b) + ")";
    case Kind::point: return "point(" + num(a) + ")";
  }
  return "";
}

InitialSpec InitialSpec::parse(const std::string& raw) {
  std::string text = raw;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.erase(text.begin());
  InitialSpec spec;
  if (text.rfind("product(", 0) == 0) {
    if (text.back() != ')') throw ConfigInvalid("x0", "unterminated product(...)");
    std::string body = text.substr(8, text.size() - 9);
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= body.size(); ++k) {
      if (k == body.size() || (body[k] == ',' && depth == 0)) {
        spec.laws.push_back(parse_law(body.substr(start, k - start)));
        start = k + 1;
      } else if (body[k] == '(') {
        ++depth;
      } else if (body[k] == ')') {
        --depth;
      }
    }
  } else {
    spec.laws.push_back(parse_law(text));
  }
  return spec;
}

std::string InitialSpec::to_string() const {
  if (laws.size() == 1) return laws[0].to_string();
  std::string s = "product(";
  for (std::size_t k = 0; k < laws.size(); ++k) s += (k ? ", " : "") + laws[k].to_string();
  return s + ")";
}

const InitialLaw& InitialSpec::law(std::size_t axis) const { return laws.size() == 1 ? laws[0] : laws.at(axis); }

ParticleState sample_initial(const InitialSpec& spec, std::size_t n, std::size_t d, std::uint64_t seed,
                             std::uint32_t stream) {
  if (spec.laws.empty()) throw ConfigInvalid("x0", "no initial law");
  if (spec.laws.size() != 1 && spec.laws.size() != d)
    throw ConfigInvalid("x0", "product law has " + std::to_string(spec.laws.size()) + " factors but d = " +
                                  std::to_string(d));
  ParticleState s(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto u = counter_uniforms(seed, stream, i, 0, static_cast<std::uint32_t>(c / 2));
      const double uc = u[c % 2];
      const auto& law = spec.law(c);
      s.positions[i * d + c] = law.sample(uc, law.kind == InitialLaw::Kind::normal ? normal_quantile(uc) : 0.0);
    }
  }
  return s;
}

}  // namespace splitstep
