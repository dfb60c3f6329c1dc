#include <pybind11/pybind11.h>
PYBIND11_MODULE(_mvpose, m) { m.doc() = "placeholder"; }
