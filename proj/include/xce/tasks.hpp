#pragma once

#include "xce/program.hpp"

namespace xce {

// Benchmark functions: roeflux_1d, roeflux_3d, robotarm_6dof,
// humanheartdipole, propanecombustion, blackscholes, mlp2.
Program build_task(const std::string& name);
std::vector<std::string> task_names();

// A sensible evaluation point for each task (inside every op's domain).
std::vector<std::vector<double>> task_probe_point(const std::string& name);

}  // namespace xce
