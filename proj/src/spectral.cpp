#include <algorithm>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "dpnm/sdf.hpp"

namespace dpnm {

SpectralFunction SpectralFunction::from_samples(const SampledSDF& sdf) {
    if (sdf.grid.size() < 4) throw std::invalid_argument("need at least 4 SDF samples");
    auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        sdf.values.begin(), sdf.values.end(), sdf.grid.front(), sdf.spacing());
    return from_callable([spline](double w) { return std::max((*spline)(w), 0.0); }, sdf.omega_max(),
                         std::max(sdf.sigma, 2.0 * sdf.spacing()), sdf.grid);
}

}  // namespace dpnm
