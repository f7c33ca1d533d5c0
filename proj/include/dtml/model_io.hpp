#pragma once

#include <string>

#include "dtml/pipeline.hpp"

namespace dtml {

// JSON persistence for trained models. The file keeps everything prediction
// needs (w1, w2, L, P, gallery, labels, codebook, flags) plus solver
// telemetry; the bulk decomposition codes Z and E are not stored — retrain to
// recover them. Doubles are written with shortest round-trip precision, so a
// save -> load cycle is bit-exact.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace dtml
