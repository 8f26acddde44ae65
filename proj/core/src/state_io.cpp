#include "rotorsim/state_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace rotorsim {

namespace {

using nlohmann::json;

json basis_descriptor(const BasisSet& basis) {
  json d{{"top", to_string(basis.top())}, {"jmax", basis.j_max()}};
  if (basis.is_restricted()) {
    // restricted sets built by m_restricted carry one m throughout
    d["m"] = basis.state_at(0).m;
  }
  return d;
}

std::shared_ptr<const BasisSet> basis_from_descriptor(const json& d) {
  auto basis = BasisSet::build(top_class_from_string(d.at("top").get<std::string>()),
                               d.at("jmax").get<int>());
  if (d.contains("m")) return basis->m_restricted(d.at("m").get<int>());
  return basis;
}

json complex_list(const Complex* data, std::size_t n) {
  json out = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(data[i].real());
    out.push_back(data[i].imag());
  }
  return out;
}

}  // namespace

std::string state_to_json(const QuantumState& state) {
  json doc;
  doc["basis"] = basis_descriptor(*state.basis());
  if (state.is_pure()) {
    doc["kind"] = "pure";
    doc["data"] = complex_list(state.vector().data(), state.vector().size());
  } else {
    doc["kind"] = "mixed";
    doc["data"] = complex_list(state.density().data(),
                               static_cast<std::size_t>(state.density().size()));
  }
  return doc.dump(2) + "\n";
}

QuantumState state_from_json(const std::string& text) {
  const json doc = json::parse(text);
  auto basis = basis_from_descriptor(doc.at("basis"));
  const auto& data = doc.at("data");
  const std::string kind = doc.at("kind").get<std::string>();
  const int n = basis->dimension();
  if (kind == "pure") {
    if (static_cast<int>(data.size()) != 2 * n) {
      throw std::invalid_argument("state file: vector length mismatch");
    }
    Eigen::VectorXcd psi(n);
    for (int i = 0; i < n; ++i) {
      psi[i] = Complex(data[2 * i].get<double>(), data[2 * i + 1].get<double>());
    }
    return QuantumState::pure(std::move(basis), std::move(psi));
  }
  if (kind == "mixed") {
    if (static_cast<int>(data.size()) != 2 * n * n) {
      throw std::invalid_argument("state file: matrix size mismatch");
    }
    Eigen::MatrixXcd rho(n, n);
    for (int i = 0; i < n * n; ++i) {
      rho.data()[i] =
          Complex(data[2 * i].get<double>(), data[2 * i + 1].get<double>());
    }
    return QuantumState::mixed(std::move(basis), std::move(rho));
  }
  throw std::invalid_argument("state file: unknown kind '" + kind + "'");
}

void save_state(const std::string& path, const QuantumState& state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open state file for writing: " + path);
  out << state_to_json(state);
}

QuantumState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open state file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return state_from_json(buf.str());
}

}  // namespace rotorsim
