#include "cov3d/model_io.hpp"

#include "cov3d/errors.hpp"
#include "cov3d/spd.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cov3d {

using nlohmann::json;

namespace {

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vector vector_from_json(const json& j) {
  Vector v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<int>(i)] = j.at(i).get<double>();
  }
  return v;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix matrix_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int c = 0; c < cols; ++c) {
      m(i, c) = j.at(static_cast<std::size_t>(i))
                    .at(static_cast<std::size_t>(c))
                    .get<double>();
    }
  }
  return m;
}

json config_to_json(const BoostConfig& config) {
  return {
      {"detection_rate", config.detection_rate},
      {"rejection_rate", config.rejection_rate},
      {"margin", config.margin},
      {"max_iterations", config.max_iterations},
      {"knn", config.knn},
      {"projection_dim", config.projection_dim},
      {"min_frac", config.min_frac},
      {"step_frac", config.step_frac},
      {"window_samples", config.window_samples},
      {"mapper", mapper_kind_name(config.mapper)},
      {"sigma", config.sigma},
      {"seed", config.seed},
      {"threads", config.threads},
  };
}

BoostConfig config_from_json(const json& j) {
  BoostConfig config;
  config.detection_rate = j.at("detection_rate").get<double>();
  config.rejection_rate = j.at("rejection_rate").get<double>();
  config.margin = j.at("margin").get<double>();
  config.max_iterations = j.at("max_iterations").get<int>();
  config.knn = j.at("knn").get<int>();
  config.projection_dim = j.at("projection_dim").get<int>();
  config.min_frac = j.at("min_frac").get<double>();
  config.step_frac = j.at("step_frac").get<double>();
  config.window_samples = j.at("window_samples").get<int>();
  config.mapper = mapper_kind_from_name(j.at("mapper").get<std::string>());
  config.sigma = j.at("sigma").get<double>();
  config.seed = j.at("seed").get<std::uint64_t>();
  config.threads = j.at("threads").get<int>();
  return config;
}

// Row-major upper triangle, unscaled. The sqrt(2) isometry convention
// of vectorize_upper_triangle is deliberately not applied here: the
// scale/unscale pair loses an ulp per off-diagonal entry, and the
// matrix logarithm amplifies that through the smallest regularization
// eigenvalues into ~1e-10 score drift, well above the bit-exact
// round-trip the format promises. The packing is recorded in the file.
json pack_upper(const Matrix& symmetric) {
  const int d = static_cast<int>(symmetric.rows());
  json out = json::array();
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) out.push_back(symmetric(i, j));
  }
  return out;
}

Matrix unpack_upper(const json& packed, int dim) {
  Matrix out(dim, dim);
  std::size_t k = 0;
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const double value = packed.at(k++).get<double>();
      out(i, j) = value;
      out(j, i) = value;
    }
  }
  return out;
}

json learner_to_json(const WeakLearner& learner) {
  json out;
  out["window"] = {learner.window.x1, learner.window.y1, learner.window.t1,
                   learner.window.x2, learner.window.y2, learner.window.t2};
  out["mapper"] = mapper_kind_name(learner.mapper);
  out["coeffs"] = vector_to_json(learner.coeffs);
  if (learner.mapper == MapperKind::wrlpp) {
    json wrlpp;
    wrlpp["sigma"] = learner.wrlpp.sigma;
    wrlpp["projection"] = matrix_to_json(learner.wrlpp.projection);
    wrlpp["dim"] = learner.wrlpp.input_dim();
    wrlpp["packing"] = "upper_triangle_row_major";
    wrlpp["off_diagonal_scale"] = 1.0;
    json points = json::array();
    for (const Matrix& point : learner.wrlpp.train_points) {
      points.push_back(pack_upper(point));
    }
    wrlpp["train_points_upper"] = std::move(points);
    out["wrlpp"] = std::move(wrlpp);
  } else if (learner.mapper == MapperKind::karcher_tangent) {
    out["karcher_base"] = matrix_to_json(learner.karcher_base);
  }
  return out;
}

WeakLearner learner_from_json(const json& j) {
  WeakLearner learner;
  const json& w = j.at("window");
  learner.window = {w.at(0).get<int>(), w.at(1).get<int>(),
                    w.at(2).get<int>(), w.at(3).get<int>(),
                    w.at(4).get<int>(), w.at(5).get<int>()};
  learner.mapper = mapper_kind_from_name(j.at("mapper").get<std::string>());
  learner.coeffs = vector_from_json(j.at("coeffs"));
  if (learner.mapper == MapperKind::wrlpp) {
    const json& wrlpp = j.at("wrlpp");
    learner.wrlpp.sigma = wrlpp.at("sigma").get<double>();
    learner.wrlpp.projection = matrix_from_json(wrlpp.at("projection"));
    const int dim = wrlpp.at("dim").get<int>();
    if (wrlpp.value("off_diagonal_scale", 1.0) != 1.0) {
      throw VersionMismatchError("unsupported descriptor packing scale");
    }
    for (const json& packed : wrlpp.at("train_points_upper")) {
      learner.wrlpp.train_points.push_back(unpack_upper(packed, dim));
    }
  } else if (learner.mapper == MapperKind::karcher_tangent) {
    learner.karcher_base = matrix_from_json(j.at("karcher_base"));
  }
  return learner;
}

json payload_to_json(const MulticlassModel& model) {
  json payload;
  payload["labels"] = model.labels;
  payload["dims"] = {model.dims.width, model.dims.height, model.dims.length};
  payload["config"] = config_to_json(model.config);
  payload["classifiers"] = json::array();
  for (const BinaryClassifier& classifier : model.classifiers) {
    json c;
    c["label_a"] = classifier.label_a;
    c["label_b"] = classifier.label_b;
    c["positive_label"] = classifier.positive_label;
    c["threshold"] = classifier.threshold;
    c["no_separation"] = classifier.no_separation;
    c["nll_history"] = classifier.nll_history;
    c["nll_violation"] = classifier.nll_violation;
    c["learners"] = json::array();
    for (const WeakLearner& learner : classifier.learners) {
      c["learners"].push_back(learner_to_json(learner));
    }
    payload["classifiers"].push_back(std::move(c));
  }
  return payload;
}

MulticlassModel payload_from_json(const json& payload) {
  MulticlassModel model;
  model.labels = payload.at("labels").get<std::vector<std::string>>();
  const json& dims = payload.at("dims");
  model.dims = {dims.at(0).get<int>(), dims.at(1).get<int>(),
                dims.at(2).get<int>()};
  model.config = config_from_json(payload.at("config"));
  for (const json& c : payload.at("classifiers")) {
    BinaryClassifier classifier;
    classifier.label_a = c.at("label_a").get<int>();
    classifier.label_b = c.at("label_b").get<int>();
    classifier.positive_label = c.at("positive_label").get<int>();
    classifier.threshold = c.at("threshold").get<double>();
    classifier.no_separation = c.at("no_separation").get<bool>();
    classifier.nll_history = c.at("nll_history").get<std::vector<double>>();
    classifier.nll_violation = c.at("nll_violation").get<bool>();
    for (const json& learner : c.at("learners")) {
      classifier.learners.push_back(learner_from_json(learner));
    }
    model.classifiers.push_back(std::move(classifier));
  }
  return model;
}

json document_for(const MulticlassModel& model) {
  json doc;
  json payload = payload_to_json(model);
  doc["format_version"] = kModelFormatVersion;
  doc["checksum"] = fnv1a64_hex(payload.dump());
  doc["payload"] = std::move(payload);
  return doc;
}

}  // namespace

std::string model_to_json(const MulticlassModel& model) {
  return document_for(model).dump(2);
}

void save_model(const MulticlassModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write model");
  out << model_to_json(model) << "\n";
  if (!out) throw IoError(path + ": write failed");
}

MulticlassModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open model");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ChecksumMismatchError(path + ": unreadable model file: " +
                                e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw ChecksumMismatchError(path + ": missing model envelope");
  }
  if (doc.at("format_version").get<int>() != kModelFormatVersion) {
    throw VersionMismatchError(
        path + ": unsupported model format version " +
        doc.at("format_version").dump());
  }
  if (!doc.contains("payload") || !doc.contains("checksum")) {
    throw ChecksumMismatchError(path + ": missing model payload");
  }
  const std::string expected = doc.at("checksum").get<std::string>();
  const std::string actual = fnv1a64_hex(doc.at("payload").dump());
  if (expected != actual) {
    throw ChecksumMismatchError(path + ": checksum " + actual +
                                " does not match recorded " + expected);
  }
  try {
    return payload_from_json(doc.at("payload"));
  } catch (const json::exception& e) {
    throw ChecksumMismatchError(path + ": malformed model payload: " +
                                e.what());
  }
}

}  // namespace cov3d
