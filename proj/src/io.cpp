#include "kolmo/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kolmo {

nlohmann::json spec_to_json(const SystemSpec& spec) {
  nlohmann::json j;
  j["kappa"] = spec.kappa;
  j["beta"] = spec.beta;
  j["dims"] = spec.dims;
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : spec.blocks) {
    nlohmann::json flat = nlohmann::json::array();
    for (int r = 0; r < b.rows(); ++r)
      for (int c = 0; c < b.cols(); ++c) flat.push_back(b(r, c));
    blocks.push_back(std::move(flat));
  }
  j["blocks"] = std::move(blocks);
  j["lambda"] = spec.lambda;
  return j;
}

SystemSpec spec_from_json(const nlohmann::json& j) {
  try {
    const int kappa = j.at("kappa").get<int>();
    const double beta = j.at("beta").get<double>();
    const auto dims = j.at("dims").get<std::vector<int>>();
    const double lambda = j.at("lambda").get<double>();
    if (static_cast<int>(dims.size()) != kappa + 1)
      throw InvalidSpecError("dims must list kappa+1 entries");
    std::vector<Eigen::MatrixXd> blocks;
    const auto& jb = j.at("blocks");
    if (static_cast<int>(jb.size()) != kappa) throw InvalidSpecError("blocks must list kappa entries");
    for (int i = 1; i <= kappa; ++i) {
      const auto flat = jb.at(i - 1).get<std::vector<double>>();
      const int rows = dims[static_cast<std::size_t>(i)];
      const int cols = dims[static_cast<std::size_t>(i - 1)];
      if (static_cast<int>(flat.size()) != rows * cols)
        throw InvalidSpecError("block " + std::to_string(i) + " has wrong element count");
      Eigen::MatrixXd b(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) b(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
      blocks.push_back(std::move(b));
    }
    return SystemSpec::validated(kappa, beta, dims, std::move(blocks), lambda);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpecError(std::string("malformed spec JSON: ") + e.what());
  }
}

SystemSpec load_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpecError("cannot open spec file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpecError(std::string("cannot parse spec file: ") + e.what());
  }
  return spec_from_json(j);
}

void save_spec_file(const SystemSpec& spec, const std::filesystem::path& path) {
  write_text_file(path, spec_to_json(spec).dump(2) + "\n");
}

nlohmann::json point_to_json(const KineticPoint& z) {
  nlohmann::json j;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : z.layers) {
    nlohmann::json layer = nlohmann::json::array();
    for (int c = 0; c < l.size(); ++c) layer.push_back(l(c));
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  j["t"] = z.t;
  return j;
}

KineticPoint point_from_json(const SystemSpec& spec, const nlohmann::json& j) {
  try {
    const auto& jl = j.at("layers");
    if (static_cast<int>(jl.size()) != spec.kappa + 1)
      throw InvalidSpecError("point must carry kappa+1 layers");
    KineticPoint z;
    for (int i = 0; i <= spec.kappa; ++i) {
      const auto vals = jl.at(i).get<std::vector<double>>();
      if (static_cast<int>(vals.size()) != spec.dims[static_cast<std::size_t>(i)])
        throw InvalidSpecError("layer " + std::to_string(i) + " has wrong dimension");
      Eigen::VectorXd v(vals.size());
      for (std::size_t c = 0; c < vals.size(); ++c) v(static_cast<int>(c)) = vals[c];
      z.layers.push_back(std::move(v));
    }
    z.t = j.at("t").get<double>();
    return z;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpecError(std::string("malformed point JSON: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kolmo
