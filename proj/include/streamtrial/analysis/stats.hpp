/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#ifndef STREAMTRIAL_ANALYSIS_STATS_HPP_
#define STREAMTRIAL_ANALYSIS_STATS_HPP_

#include <vector>

namespace streamtrial::analysis {

/// Even count: mean of the two middle values. Throws RangeError when empty.
double median(std::vector<double> values);

/// Linear interpolation between closest ranks, p in [0, 100]. Throws RangeError when empty.
double percentile(std::vector<double> values, double p);

/// 75th minus 25th percentile.
double iqr(const std::vector<double>& values);

double mean(const std::vector<double>& values);

struct MannWhitney {
    double u = 0.0;// statistic of the first sample
    double z = 0.0;
    double p_value = 1.0;
};

/// Two-sided Mann-Whitney U with the normal approximation, tie-corrected variance and a 0.5
/// continuity correction. Identical pooled values give p = 1. Throws RangeError on an empty sample.
MannWhitney mann_whitney(const std::vector<double>& x, const std::vector<double>& y);

/// Ranks 1..n, ties get the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Pearson correlation of average ranks. Needs equal sizes >= 2; 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}// namespace streamtrial::analysis

#endif// STREAMTRIAL_ANALYSIS_STATS_HPP_
