/// @file report.cpp

namespace rotflow {}
