/// @file suite.cpp

namespace rotflow {}
