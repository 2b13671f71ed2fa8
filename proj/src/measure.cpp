#include "phasegn/measure.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "phasegn/random.hpp"

namespace phasegn {

SensingEnsemble sample_ensemble(Index m, Index n, Field field,
                                std::uint64_t seed) {
  if (m < 1 || n < 1) {
    throw DimensionMismatch("sample_ensemble: m and n must be >= 1");
  }
  SensingEnsemble e{ComplexMatrix(m, n), field, seed, 0};
  const double sd = field == Field::Complex ? std::sqrt(0.5) : 1.0;
  std::normal_distribution<double> normal(0.0, sd);
  for (Index j = 0; j < m; ++j) {
    auto engine =
        make_engine(seed, Stream::Ensemble, static_cast<std::uint64_t>(j));
    normal.reset();  // drop the cached spare variate of the previous row
    for (Index k = 0; k < n; ++k) {
      const double re = normal(engine);
      const double im = field == Field::Complex ? normal(engine) : 0.0;
      e.a(j, k) = Complex(re, im);
    }
  }
  return e;
}

Signal sample_signal(Index n, Field field, std::uint64_t seed) {
  if (n < 1) throw DimensionMismatch("sample_signal: n must be >= 1");
  auto engine = make_engine(seed, Stream::Signal);
  const double sd = field == Field::Complex ? std::sqrt(0.5) : 1.0;
  std::normal_distribution<double> normal(0.0, sd);
  ComplexVector v(n);
  for (Index k = 0; k < n; ++k) {
    const double re = normal(engine);
    const double im = field == Field::Complex ? normal(engine) : 0.0;
    v(k) = Complex(re, im);
  }
  return Signal(std::move(v), field);
}

void check_compatible(const SensingEnsemble& ensemble,
                      const Observations& observations) {
  if (ensemble.m() != observations.m()) {
    throw DimensionMismatch("ensemble has " + std::to_string(ensemble.m()) +
                            " rows but " + std::to_string(observations.m()) +
                            " observations");
  }
}

void check_compatible(const SensingEnsemble& ensemble, const Signal& x) {
  if (ensemble.n() != x.size()) {
    throw DimensionMismatch("signal length " + std::to_string(x.size()) +
                            " does not match ensemble n = " +
                            std::to_string(ensemble.n()));
  }
  if (ensemble.field == Field::Real && x.field() == Field::Complex) {
    throw FieldMismatch("complex signal with a real ensemble");
  }
}

Observations observe(const SensingEnsemble& ensemble, const Signal& z,
                     double noise_sigma, std::uint64_t seed) {
  check_compatible(ensemble, z);
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  Observations obs{(ensemble.a * z.values()).cwiseAbs2(), noise_sigma, seed};
  if (noise_sigma > 0.0) {
    auto engine = make_engine(seed, Stream::Noise);
    std::normal_distribution<double> normal(0.0, noise_sigma);
    for (Index j = 0; j < obs.y.size(); ++j) obs.y(j) += normal(engine);
  }
  return obs;
}

std::vector<Block> partition(const SensingEnsemble& ensemble,
                             const Observations& observations, Index blocks) {
  check_compatible(ensemble, observations);
  if (blocks < 1) throw ConfigError("partition: blocks must be >= 1");
  if (blocks > ensemble.m()) {
    throw ConfigError("partition: " + std::to_string(blocks) +
                      " blocks exceed m = " + std::to_string(ensemble.m()));
  }
  const Index rows = ensemble.m() / blocks;
  std::vector<Block> out;
  out.reserve(static_cast<std::size_t>(blocks));
  for (Index b = 0; b < blocks; ++b) {
    const Index first = b * rows;
    out.push_back(Block{
        SensingEnsemble{ensemble.a.middleRows(first, rows), ensemble.field,
                        ensemble.seed, ensemble.row_offset + first},
        Observations{observations.y.segment(first, rows),
                     observations.noise_sigma, observations.seed}});
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "instance files are written in native little-endian order");

void write_doubles(const std::filesystem::path& path,
                   const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw Error("short write to " + path.string());
}

std::vector<double> read_doubles(const std::filesystem::path& path,
                                 std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> data(expected);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(expected * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(expected * sizeof(double)) ||
      in.peek() != std::char_traits<char>::eof()) {
    throw DimensionMismatch(path.string() + " has the wrong size");
  }
  return data;
}

std::vector<double> flatten(const ComplexVector& v, Field field) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(v.size()) * 2);
  for (Index i = 0; i < v.size(); ++i) {
    out.push_back(v(i).real());
    if (field == Field::Complex) out.push_back(v(i).imag());
  }
  return out;
}

}  // namespace

void write_instance(const std::filesystem::path& dir,
                    const ProblemInstance& instance) {
  const auto& e = instance.ensemble;
  check_compatible(e, instance.observations);
  std::filesystem::create_directories(dir);

  nlohmann::json meta;
  meta["m"] = e.m();
  meta["n"] = e.n();
  meta["field"] = to_string(e.field);
  meta["ensemble_seed"] = e.seed;
  meta["noise_seed"] = instance.observations.seed;
  meta["sigma"] = instance.observations.noise_sigma;
  meta["layout"] = "row-major float64 little-endian; complex re/im interleaved";
  if (instance.truth) {
    check_compatible(e, *instance.truth);
    meta["signal_field"] = to_string(instance.truth->field());
  }
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';

  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(e.m() * e.n() * 2));
  for (Index j = 0; j < e.m(); ++j) {
    for (Index k = 0; k < e.n(); ++k) {
      a.push_back(e.a(j, k).real());
      if (e.field == Field::Complex) a.push_back(e.a(j, k).imag());
    }
  }
  write_doubles(dir / "A.bin", a);
  const RealVector& y = instance.observations.y;
  write_doubles(dir / "y.bin", std::vector<double>(y.data(), y.data() + y.size()));
  if (instance.truth) {
    write_doubles(dir / "z.bin", flatten(instance.truth->values(),
                                         instance.truth->field()));
  }
}

ProblemInstance read_instance(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw Error("missing " + (dir / "meta.json").string());
  const auto meta = nlohmann::json::parse(meta_in);
  const Index m = meta.at("m").get<Index>();
  const Index n = meta.at("n").get<Index>();
  if (m < 1 || n < 1) throw DimensionMismatch("meta.json: bad dimensions");
  const Field field = parse_field(meta.at("field").get<std::string>());
  const std::size_t width = field == Field::Complex ? 2 : 1;

  ProblemInstance inst;
  inst.ensemble = {ComplexMatrix(m, n), field,
                   meta.at("ensemble_seed").get<std::uint64_t>(), 0};
  const auto a = read_doubles(dir / "A.bin",
                              static_cast<std::size_t>(m * n) * width);
  std::size_t pos = 0;
  for (Index j = 0; j < m; ++j) {
    for (Index k = 0; k < n; ++k) {
      const double re = a[pos++];
      const double im = width == 2 ? a[pos++] : 0.0;
      inst.ensemble.a(j, k) = Complex(re, im);
    }
  }
  const auto y = read_doubles(dir / "y.bin", static_cast<std::size_t>(m));
  inst.observations = {Eigen::Map<const RealVector>(y.data(), m),
                       meta.at("sigma").get<double>(),
                       meta.at("noise_seed").get<std::uint64_t>()};
  if (meta.contains("signal_field") &&
      std::filesystem::exists(dir / "z.bin")) {
    const Field sf = parse_field(meta.at("signal_field").get<std::string>());
    const std::size_t zw = sf == Field::Complex ? 2 : 1;
    const auto z = read_doubles(dir / "z.bin", static_cast<std::size_t>(n) * zw);
    ComplexVector v(n);
    for (Index k = 0; k < n; ++k) {
      v(k) = Complex(z[k * zw], zw == 2 ? z[k * zw + 1] : 0.0);
    }
    inst.truth = Signal(std::move(v), sf);
  }
  return inst;
}

}  // namespace phasegn
