#include "windcast/training.hpp"

#include <cstdio>

namespace windcast {

std::string to_csv(const TrainTrace& trace) {
  std::string out = "epoch,train_mse,validation_mse,step_size\n";
  char buf[128];
  for (const auto& e : trace.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,", e.epoch, e.train_mse);
    out += buf;
    if (e.validation_mse) {
      std::snprintf(buf, sizeof buf, "%.17g", *e.validation_mse);
      out += buf;
    }
    out += ',';
    if (e.step_size) {
      std::snprintf(buf, sizeof buf, "%.17g", *e.step_size);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace windcast
