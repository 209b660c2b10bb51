// SPDX-License-Identifier: Apache-2.0
//
// Builds an outlier-heavy activation and a Gaussian weight, then prints the
// CSV error summary for the four transform pipelines.
#include <iostream>

#include "mxrot/mxrot.hpp"

int main() {
  using namespace mxrot;

  OutlierSpec act_spec;
  act_spec.seed = 1;
  act_spec.normal_fraction = 0.005;
  act_spec.normal_magnitude = 10.0;
  act_spec.massive_count = 8;
  act_spec.massive_magnitude = 100.0;
  const Tensor x = generate_tensor(64, 512, act_spec);

  OutlierSpec w_spec;
  w_spec.seed = 2;
  w_spec.normal_fraction = 0.0;
  w_spec.massive_count = 0;
  const Tensor w = generate_tensor(512, 128, w_spec);

  std::vector<PipelineConfig> configs;
  for (auto kind : {TransformKind::original, TransformKind::hadamard, TransformKind::duquant_single,
                    TransformKind::duquant_dual}) {
    PipelineConfig c;
    c.transform = kind;
    c.seed = 7;
    configs.push_back(c);
  }
  std::cout << compare_pipelines(x, w, configs).summary_csv;
  return 0;
}
