/*
 * Copyright 2026 The PBM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pbm/predict.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pbm/parallel.hpp"

namespace pbm {

void Model::validate() const {
  loss.validate();
  kernel.validate();
  if (vectors.size() != indices.size() || labels.size() != indices.size()) {
    throw std::invalid_argument("model: vector pool arrays differ in length");
  }
  const auto check = [&](const Expansion& e) {
    if (e.slots.size() != e.coef.size()) throw std::invalid_argument("model: expansion size mismatch");
    for (const auto s : e.slots) {
      if (s >= vectors.size()) throw std::invalid_argument("model: expansion slot out of range");
    }
  };
  check(support);
  for (const double a : support.coef) {
    if (!(a > 0.0)) throw std::invalid_argument("model: support coefficient must be > 0");
  }
  if (local) {
    check(local->base);
    for (const auto& d : local->directions) check(d);
    if (local->centers.empty() || local->directions.size() != local->centers.size()) {
      throw std::invalid_argument("model: local directions do not match centers");
    }
  }
}

Model build_model(const Dataset& data, const LossSpec& loss, const KernelSpec& kernel,
                  std::span<const double> alpha, const Partition* partition,
                  std::span<const double> local_base, std::span<const double> local_direction) {
  const std::size_t n = data.size();
  if (alpha.size() != n) throw std::invalid_argument("alpha length != dataset size");
  const bool with_local = partition != nullptr && partition->centers.has_value();
  if (with_local) {
    if (partition->size() != n) throw std::invalid_argument("partition size != dataset size");
    if (local_base.empty()) local_base = alpha;
    if (local_base.size() != n || (!local_direction.empty() && local_direction.size() != n)) {
      throw std::invalid_argument("local vectors have wrong length");
    }
  }

  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    used[i] = alpha[i] > 0.0 ||
              (with_local && (local_base[i] > 0.0 || (!local_direction.empty() && local_direction[i] != 0.0)));
  }

  Model model;
  model.loss = loss;
  model.kernel = kernel;
  model.label_map = data.label_map;
  std::vector<std::size_t> slot_of(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!used[i]) continue;
    slot_of[i] = model.indices.size();
    model.indices.push_back(i);
    model.vectors.push_back(data.samples[i]);
    model.labels.push_back(data.labels[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0) {
      model.support.slots.push_back(slot_of[i]);
      model.support.coef.push_back(alpha[i]);
    }
  }
  if (with_local) {
    LocalModel local;
    local.centers = *partition->centers;
    for (std::size_t i = 0; i < n; ++i) {
      if (local_base[i] > 0.0) {
        local.base.slots.push_back(slot_of[i]);
        local.base.coef.push_back(local_base[i]);
      }
    }
    local.directions.resize(partition->k);
    if (!local_direction.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (local_direction[i] == 0.0) continue;
        auto& e = local.directions[partition->assignment[i]];
        e.slots.push_back(slot_of[i]);
        e.coef.push_back(local_direction[i]);
      }
    }
    model.local = std::move(local);
  }
  return model;
}

double decision_value(const Model& model, const Expansion& expansion, const SparseVector& x) {
  double s = 0.0;
  for (std::size_t t = 0; t < expansion.size(); ++t) {
    const auto slot = expansion.slots[t];
    s += expansion.coef[t] * model.labels[slot] * kernel_eval(model.kernel, model.vectors[slot], x);
  }
  return s;
}

double decision_value(const Model& model, const SparseVector& x) {
  return decision_value(model, model.support, x);
}

double predict(const Model& model, const SparseVector& x) { return sign_label(decision_value(model, x)); }

double local_decision_value(const Model& model, const SparseVector& x) {
  if (!model.local) throw std::logic_error("model has no kmeans centers / local directions");
  const auto r = nearest_center(model.local->centers, x);
  return decision_value(model, model.local->base, x) + decision_value(model, model.local->directions[r], x);
}

double predict_local(const Model& model, const SparseVector& x) {
  return sign_label(local_decision_value(model, x));
}

std::string to_string(PredictMode mode) { return mode == PredictMode::global ? "global" : "local"; }

PredictMode predict_mode_from_string(const std::string& name) {
  if (name == "global") return PredictMode::global;
  if (name == "local") return PredictMode::local;
  throw std::invalid_argument("unknown prediction mode '" + name + "'");
}

std::vector<double> predict_all(const Model& model, const Dataset& data, PredictMode mode,
                                std::size_t threads) {
  if (mode == PredictMode::local && !model.local) {
    throw std::logic_error("model has no kmeans centers / local directions");
  }
  std::vector<double> out(data.size());
  parallel_for(data.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = mode == PredictMode::global ? predict(model, data.samples[i]) : predict_local(model, data.samples[i]);
    }
  });
  return out;
}

double accuracy(const Model& model, const Dataset& test, PredictMode mode, std::size_t threads) {
  if (test.size() == 0) return 0.0;
  const auto labels = predict_all(model, test, mode, threads);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += labels[i] == test.labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

using nlohmann::json;

json indices_of(const Model& m, const Expansion& e) {
  json out = json::array();
  for (const auto s : e.slots) out.push_back(m.indices[s]);
  return out;
}

Expansion expansion_from(const std::map<std::size_t, std::size_t>& slot_of, const json& indices,
                         const json& values) {
  Expansion e;
  const auto idx = indices.get<std::vector<std::size_t>>();
  e.coef = values.get<std::vector<double>>();
  if (idx.size() != e.coef.size()) throw std::invalid_argument("model: index/value length mismatch");
  for (const auto i : idx) {
    const auto it = slot_of.find(i);
    if (it == slot_of.end()) throw std::invalid_argument("model: unknown vector index " + std::to_string(i));
    e.slots.push_back(it->second);
  }
  return e;
}

}  // namespace

std::string model_to_json(const Model& model) {
  json j;
  j["format"] = "pbm-model";
  j["version"] = 1;
  j["loss"] = to_string(model.loss.kind);
  j["C"] = model.loss.C;
  j["kernel"] = to_string(model.kernel.kind);
  j["gamma"] = model.kernel.gamma;
  j["label_map"] = {{"positive", model.label_map.positive}, {"negative", model.label_map.negative}};

  json vectors = json::array();
  for (std::size_t s = 0; s < model.vectors.size(); ++s) {
    json features = json::array();
    for (const auto& e : model.vectors[s].entries()) features.push_back({e.index, e.value});
    vectors.push_back({{"index", model.indices[s]}, {"label", model.labels[s]}, {"features", features}});
  }
  j["vectors"] = std::move(vectors);

  j["support_indices"] = indices_of(model, model.support);
  j["alpha"] = model.support.coef;
  json sv_labels = json::array();
  for (const auto s : model.support.slots) sv_labels.push_back(model.labels[s]);
  j["support_labels"] = std::move(sv_labels);

  if (model.local) {
    j["centers"] = model.local->centers;
    json dirs = json::array();
    for (std::size_t r = 0; r < model.local->directions.size(); ++r) {
      const auto& e = model.local->directions[r];
      dirs.push_back({{"block", r}, {"indices", indices_of(model, e)}, {"values", e.coef}});
    }
    j["local"] = {{"base_indices", indices_of(model, model.local->base)},
                  {"base_alpha", model.local->base.coef},
                  {"directions", std::move(dirs)}};
  } else {
    j["centers"] = nullptr;
    j["local"] = nullptr;
  }
  return j.dump(1) + "\n";
}

Model model_from_json(const std::string& text) {
  const auto j = json::parse(text);
  if (j.value("format", "") != "pbm-model") throw std::invalid_argument("not a pbm model file");
  Model m;
  m.loss = {loss_kind_from_string(j.at("loss").get<std::string>()), j.at("C").get<double>()};
  m.kernel = {kernel_kind_from_string(j.at("kernel").get<std::string>()), j.at("gamma").get<double>()};
  m.label_map = {j.at("label_map").at("positive").get<double>(), j.at("label_map").at("negative").get<double>()};

  std::map<std::size_t, std::size_t> slot_of;
  for (const auto& v : j.at("vectors")) {
    std::vector<SparseEntry> entries;
    for (const auto& f : v.at("features")) entries.push_back({f.at(0).get<std::uint32_t>(), f.at(1).get<double>()});
    const auto index = v.at("index").get<std::size_t>();
    slot_of[index] = m.indices.size();
    m.indices.push_back(index);
    m.vectors.emplace_back(std::move(entries));
    m.labels.push_back(v.at("label").get<double>());
  }
  m.support = expansion_from(slot_of, j.at("support_indices"), j.at("alpha"));

  if (!j.at("local").is_null()) {
    LocalModel local;
    local.centers = j.at("centers").get<std::vector<std::vector<double>>>();
    const auto& l = j.at("local");
    local.base = expansion_from(slot_of, l.at("base_indices"), l.at("base_alpha"));
    for (const auto& d : l.at("directions")) {
      local.directions.push_back(expansion_from(slot_of, d.at("indices"), d.at("values")));
    }
    m.local = std::move(local);
  }
  m.validate();
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace pbm
